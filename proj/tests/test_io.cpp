#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "isocycle/io.hpp"
#include "isocycle/jobs.hpp"
#include "isocycle/types.hpp"

namespace fs = std::filesystem;
using namespace isocycle;

namespace {

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / "isocycle-io-test";
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string file(const std::string& name, const std::string& text) {
        const fs::path p = dir / name;
        std::ofstream(p) << text;
        return p.string();
    }
};

}  // namespace

TEST_CASE("format_double emits 17 significant digits round-trippably") {
    CHECK(format_double(1.0) == "1");
    const double x = 0.1 + 0.2;
    const std::string s = format_double(x);
    CHECK(std::strtod(s.c_str(), nullptr) == x);
    CHECK(s == "0.30000000000000004");
}

TEST_CASE("complex round trip through JSON") {
    const Complex z(3.5, -0.125);
    CHECK(complex_from_json(complex_to_json(z)) == z);
    CHECK(complex_from_json(nlohmann::json(2.5)) == Complex(2.5, 0.0));
    CHECK(complex_from_json(nlohmann::json("1.5")) == Complex(1.5, 0.0));
}

TEST_CASE("matrix round trip through JSON") {
    CMatrix m(2, 2);
    m << Complex(1.2, 0.0), Complex(0.0, -0.5), Complex(2.0, 1.0), Complex(0.25, 0.0);
    const CMatrix back = matrix_from_json(matrix_to_json(m));
    CHECK((back - m).norm() == 0.0);
}

TEST_CASE("fnv1a hash is stable") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("abc") != fnv1a_hex("abd"));
}

TEST_CASE("malformed path file raises an input error") {
    TempDir tmp;
    const std::string bad = tmp.file("bad.json", "{ not json");
    CHECK_THROWS_AS(load_path(bad), InputError);
    const std::string wrong = tmp.file("wrong.json", R"({"n": 2, "waypoints": []})");
    CHECK_THROWS_AS(load_path(wrong), InputError);
}

TEST_CASE("job validation") {
    TempDir tmp;
    CHECK_THROWS_AS(load_job(tmp.file("a.json", "{}")), InputError);
    CHECK_THROWS_AS(load_job(tmp.file("b.json", R"({"command": "warp"})")), InputError);
    CHECK_THROWS_AS(load_job(tmp.file("c.json", R"({"command": "continue"})")), InputError);
    CHECK_THROWS_AS(
        load_job(tmp.file("d.json", R"({"command": "volume", "n": 2, "f1": [1, 0]})")),
        InputError);
    CHECK_THROWS_AS(load_job(tmp.file("e.json", R"({"command": "eval", "n": 3})")), InputError);

    const JobSpec vol = load_job(tmp.file("f.json", R"({"command": "volume", "n": 4})"));
    CHECK(vol.resolution == default_resolution(4));
    CHECK(vol.f1 == std::vector<int>({0, 0, 0, 0}));
}

TEST_CASE("relative path_file resolves against the job file directory") {
    TempDir tmp;
    tmp.file("p.json", R"({"n": 2, "samples_per_segment": 8, "waypoints": []})");
    const JobSpec job = load_job(tmp.file(
        "job.json", R"({"command": "continue", "n": 2, "path_file": "p.json"})"));
    REQUIRE(job.path_file.has_value());
    CHECK(fs::path(*job.path_file).parent_path() == tmp.dir);
}

TEST_CASE("a failing job writes no partial outputs") {
    TempDir tmp;
    const std::string job_file =
        tmp.file("job.json", R"({"command": "continue", "n": 2, "path_file": "missing.json"})");
    const fs::path out = tmp.dir / "out";
    const JobSpec job = load_job(job_file);
    CHECK_THROWS_AS(run_job(job, out.string()), InputError);
    CHECK_FALSE(fs::exists(out / "result.json"));
}

TEST_CASE("exit codes map the documented error taxonomy") {
    CHECK(exit_code_for(InputError("x")) == kExitInputError);
    CHECK(exit_code_for(DiscriminantError("x")) == kExitDiscriminantError);
    CHECK(exit_code_for(IsotopyError("x")) == kExitIsotopyError);
    CHECK(exit_code_for(QuadratureError("x")) == kExitQuadratureError);
    CHECK(exit_code_for(std::runtime_error("x")) == kExitInputError);
}
