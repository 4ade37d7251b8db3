#include "varred/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace varred {

namespace {
constexpr char kMagic[8] = {'V', 'R', 'N', 'L', 'S', 'F', 'L', 'D'};
}

void save_field(const Field& u, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_field: cannot open " + path);
    char header[32] = {0};
    std::memcpy(header, kMagic, 8);
    const std::uint32_t n = static_cast<std::uint32_t>(u.grid().dim());
    const std::uint32_t m = static_cast<std::uint32_t>(u.grid().points());
    const double L = u.grid().half_width();
    std::memcpy(header + 8, &n, 4);
    std::memcpy(header + 12, &m, 4);
    std::memcpy(header + 16, &L, 8);
    f.write(header, 32);
    f.write(reinterpret_cast<const char*>(u.data()), static_cast<std::streamsize>(u.size() * 8));
    if (!f) throw std::runtime_error("save_field: write failed for " + path);
}

Field load_field(const std::string& path, double decay_tol) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_field: cannot open " + path);
    char header[32];
    f.read(header, 32);
    if (!f || std::memcmp(header, kMagic, 8) != 0)
        throw std::runtime_error("load_field: bad magic in " + path);
    std::uint32_t n = 0, m = 0;
    double L = 0.0;
    std::memcpy(&n, header + 8, 4);
    std::memcpy(&m, header + 12, 4);
    std::memcpy(&L, header + 16, 8);
    GridSpec grid(static_cast<int>(n), static_cast<int>(m), L, decay_tol);
    std::vector<double> vals(grid.size());
    f.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(vals.size() * 8));
    if (!f) throw std::runtime_error("load_field: truncated data in " + path);
    Field u(grid, std::move(vals));
    u.require_finite("load_field");
    return u;
}

void save_profile(const RadialProfile& p, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_profile: cannot open " + path);
    f << "r,u\n";
    for (std::size_t i = 0; i < p.radii.size(); ++i)
        f << format_double(p.radii[i]) << ',' << format_double(p.values[i]) << '\n';
}

RadialProfile load_profile(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_profile: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != "r,u")
        throw std::runtime_error("load_profile: missing r,u header in " + path);
    RadialProfile p;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("load_profile: malformed row");
        p.radii.push_back(std::stod(line.substr(0, comma)));
        p.values.push_back(std::stod(line.substr(comma + 1)));
    }
    p.validate();
    return p;
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::uint64_t field_hash(const Field& u) {
    std::uint64_t h = fnv1a(u.data(), u.size() * 8);
    const int meta[2] = {u.grid().dim(), u.grid().points()};
    return fnv1a(meta, sizeof meta, h);
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace varred
