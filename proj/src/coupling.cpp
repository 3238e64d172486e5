#include "dsrf/coupling.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dsrf {

bool Coupling::all_finite() const {
    for (const auto& p : x0)
        if (!p.finite()) return false;
    for (const auto& p : x1)
        if (!p.finite()) return false;
    return true;
}

void Coupling::validate() const {
    if (x0.empty()) throw std::invalid_argument("Coupling: must be nonempty");
    if (x0.size() != x1.size()) throw std::invalid_argument("Coupling: x0/x1 size mismatch");
    if (!all_finite()) throw std::invalid_argument("Coupling: non-finite point");
}

namespace {

void write_f64_le(std::ostream& os, double v) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
    os.write(b, 8);
}

double read_f64_le(std::istream& is) {
    char b[8];
    is.read(b, 8);
    if (is.gcount() != 8) throw std::runtime_error("pair file: unexpected end of data");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i)
        u |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return std::bit_cast<double>(u);
}

} // namespace

void save_coupling(const Coupling& c, const std::string& path) {
    c.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("pair file: cannot open for writing: " + path);
    os << "DSRFPAIR\n d=2 n=" << c.size() << "\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        write_f64_le(os, c.x0[i].x);
        write_f64_le(os, c.x0[i].y);
        write_f64_le(os, c.x1[i].x);
        write_f64_le(os, c.x1[i].y);
    }
    if (!os.good()) throw std::runtime_error("pair file: write failed: " + path);
}

Coupling load_coupling(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("pair file: cannot open: " + path);
    std::string magic;
    if (!std::getline(is, magic) || magic != "DSRFPAIR")
        throw std::runtime_error("pair file: bad magic in " + path);
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("pair file: missing header in " + path);
    int d = 0;
    long long n = -1;
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) {
        if (tok.rfind("d=", 0) == 0) d = std::stoi(tok.substr(2));
        if (tok.rfind("n=", 0) == 0) n = std::stoll(tok.substr(2));
    }
    if (d != 2 || n < 1)
        throw std::runtime_error("pair file: malformed header '" + header + "' in " + path);
    Coupling c;
    c.x0.resize(static_cast<std::size_t>(n));
    c.x1.resize(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
        c.x0[i].x = read_f64_le(is);
        c.x0[i].y = read_f64_le(is);
        c.x1[i].x = read_f64_le(is);
        c.x1[i].y = read_f64_le(is);
    }
    return c;
}

} // namespace dsrf
