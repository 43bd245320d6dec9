#include "isocycle/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace isocycle {

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

OrderedJson complex_to_json(Complex z) {
    return OrderedJson::array({format_double(z.real()), format_double(z.imag())});
}

double double_from_json(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') {
            throw InputError("io: cannot parse number from \"" + s + "\"");
        }
        return v;
    }
    throw InputError("io: expected a number, got " + j.dump());
}

Complex complex_from_json(const nlohmann::json& j) {
    if (j.is_array()) {
        if (j.size() != 2) {
            throw InputError("io: complex value must be an [re, im] pair");
        }
        return {double_from_json(j[0]), double_from_json(j[1])};
    }
    return {double_from_json(j), 0.0};
}

OrderedJson matrix_to_json(const CMatrix& m) {
    OrderedJson rows = OrderedJson::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        OrderedJson row = OrderedJson::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw InputError("io: matrix must be a nonempty array");
    const std::size_t n = j.size();
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!j[i].is_array() || j[i].size() != n) {
            throw InputError("io: matrix rows must all have length n");
        }
        for (std::size_t k = 0; k < n; ++k) m(i, k) = complex_from_json(j[i][k]);
    }
    return m;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("io: cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("io: cannot write " + path);
    out << text;
}

GroupPath path_from_json(const nlohmann::json& j) {
    if (!j.contains("waypoints")) throw InputError("io: path file lacks \"waypoints\"");
    const int n = j.value("n", 0);
    std::vector<GroupElement> waypoints;
    for (const auto& w : j.at("waypoints")) {
        CMatrix m = matrix_from_json(w);
        if (n != 0 && m.rows() != n) {
            throw InputError("io: waypoint size disagrees with declared n");
        }
        waypoints.emplace_back(std::move(m));
    }
    if (waypoints.empty()) throw InputError("io: path needs at least one waypoint");
    const int samples = j.value("samples_per_segment", 64);
    const double disc_floor =
        j.contains("disc_floor") ? double_from_json(j.at("disc_floor")) : 1e-6;
    return GroupPath(std::move(waypoints), samples, disc_floor);
}

GroupPath load_path(const std::string& file) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError("io: malformed JSON in " + file + ": " + e.what());
    }
    return path_from_json(j);
}

}  // namespace isocycle
