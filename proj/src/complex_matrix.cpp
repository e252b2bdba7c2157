#include "opcalc/complex_matrix.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "opcalc/errors.hpp"

namespace opcalc {

ComplexMatrix::ComplexMatrix(int n, std::vector<Complex> entries)
    : n_(n), e_(std::move(entries)) {
    if (n < 0 || e_.size() != static_cast<size_t>(n) * n)
        throw std::invalid_argument("ComplexMatrix: entry count does not match dimension");
}

ComplexMatrix ComplexMatrix::identity(int n) {
    ComplexMatrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(const std::vector<Complex>& d) {
    ComplexMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim(); ++i) m(i, i) = d[static_cast<size_t>(i)];
    return m;
}

bool ComplexMatrix::all_finite() const {
    for (const Complex& z : e_)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

namespace {
void require_same_dim(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
    if (a.dim() != b.dim())
        throw std::invalid_argument(std::string(op) + ": dimension mismatch");
}
}  // namespace

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
    require_same_dim(*this, rhs, "operator+=");
    for (size_t i = 0; i < e_.size(); ++i) e_[i] += rhs.e_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& rhs) {
    require_same_dim(*this, rhs, "operator-=");
    for (size_t i = 0; i < e_.size(); ++i) e_[i] -= rhs.e_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex s) {
    for (Complex& z : e_) z *= s;
    return *this;
}

ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs += rhs; }
ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs -= rhs; }

ComplexMatrix operator*(const ComplexMatrix& lhs, const ComplexMatrix& rhs) {
    require_same_dim(lhs, rhs, "operator*");
    const int n = lhs.dim();
    ComplexMatrix out(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const Complex a = lhs(i, k);
            if (a == Complex(0.0, 0.0)) continue;
            for (int j = 0; j < n; ++j) out(i, j) += a * rhs(k, j);
        }
    }
    return out;
}

ComplexMatrix operator*(Complex s, ComplexMatrix m) { return m *= s; }
ComplexMatrix operator*(double s, ComplexMatrix m) { return m *= Complex(s, 0.0); }

ComplexMatrix conj_transpose(const ComplexMatrix& m) {
    const int n = m.dim();
    ComplexMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(j, i) = std::conj(m(i, j));
    return out;
}

Complex trace(const ComplexMatrix& m) {
    Complex t = 0.0;
    for (int i = 0; i < m.dim(); ++i) t += m(i, i);
    return t;
}

double frobenius_norm(const ComplexMatrix& m) {
    double s = 0.0;
    for (const Complex& z : m.entries()) s += std::norm(z);
    return std::sqrt(s);
}

double max_abs(const ComplexMatrix& m) {
    double s = 0.0;
    for (const Complex& z : m.entries()) s = std::max(s, std::abs(z));
    return s;
}

bool approx_equal(const ComplexMatrix& a, const ComplexMatrix& b, double tol) {
    if (a.dim() != b.dim()) return false;
    for (size_t i = 0; i < a.entries().size(); ++i)
        if (std::abs(a.entries()[i] - b.entries()[i]) > tol) return false;
    return true;
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a * b - b * a;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {
double parse_double(std::string_view sv, const char* what) {
    double v = 0.0;
    auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (res.ec != std::errc() || res.ptr != sv.data() + sv.size())
        throw Error(std::string("matrix text: malformed ") + what + " '" + std::string(sv) + "'");
    if (!std::isfinite(v))
        throw Error(std::string("matrix text: non-finite ") + what);
    return v;
}
}  // namespace

std::string to_text(const ComplexMatrix& m) {
    if (!m.all_finite()) throw Error("to_text: matrix has non-finite entries");
    std::string out = std::to_string(m.dim());
    out += '\n';
    for (int i = 0; i < m.dim(); ++i) {
        for (int j = 0; j < m.dim(); ++j) {
            if (j) out += ' ';
            out += format_double(m(i, j).real());
            out += ',';
            out += format_double(m(i, j).imag());
        }
        out += '\n';
    }
    return out;
}

ComplexMatrix from_text(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    if (!(in >> tok)) throw Error("matrix text: empty input");
    int n = 0;
    {
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), n);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || n <= 0)
            throw Error("matrix text: bad dimension line '" + tok + "'");
    }
    ComplexMatrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (!(in >> tok))
                throw Error("matrix text: expected " + std::to_string(n * n) + " entries");
            const auto comma = tok.find(',');
            if (comma == std::string::npos)
                throw Error("matrix text: entry '" + tok + "' is not 're,im'");
            const double re = parse_double(std::string_view(tok).substr(0, comma), "real part");
            const double im = parse_double(std::string_view(tok).substr(comma + 1), "imaginary part");
            m(i, j) = Complex(re, im);
        }
    }
    if (in >> tok) throw Error("matrix text: trailing content '" + tok + "'");
    return m;
}

ComplexMatrix read_matrix_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MatrixFileMissing("matrix file not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return from_text(buf.str());
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

void write_matrix_file(const ComplexMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << to_text(m);
    if (!out) throw Error("write failed: " + path);
}

}  // namespace opcalc
