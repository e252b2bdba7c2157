#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace opcalc {

using Complex = std::complex<double>;

// Dense square complex matrix, row-major, value semantics. Entries are
// expected to stay finite; I/O validates this, arithmetic assumes it.
// Equality is only ever tested elementwise against a tolerance.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(int n) : n_(n), e_(static_cast<size_t>(n) * n) {}
    ComplexMatrix(int n, std::vector<Complex> entries);

    static ComplexMatrix identity(int n);
    static ComplexMatrix diagonal(const std::vector<Complex>& d);

    int dim() const { return n_; }
    bool empty() const { return n_ == 0; }

    Complex& operator()(int i, int j) { return e_[static_cast<size_t>(i) * n_ + j]; }
    const Complex& operator()(int i, int j) const { return e_[static_cast<size_t>(i) * n_ + j]; }

    std::vector<Complex>& entries() { return e_; }
    const std::vector<Complex>& entries() const { return e_; }

    bool all_finite() const;

    ComplexMatrix& operator+=(const ComplexMatrix& rhs);
    ComplexMatrix& operator-=(const ComplexMatrix& rhs);
    ComplexMatrix& operator*=(Complex s);

private:
    int n_ = 0;
    std::vector<Complex> e_;
};

ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs);
ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs);
ComplexMatrix operator*(const ComplexMatrix& lhs, const ComplexMatrix& rhs);
ComplexMatrix operator*(Complex s, ComplexMatrix m);
ComplexMatrix operator*(double s, ComplexMatrix m);

ComplexMatrix conj_transpose(const ComplexMatrix& m);
Complex trace(const ComplexMatrix& m);
double frobenius_norm(const ComplexMatrix& m);
double max_abs(const ComplexMatrix& m);

// max_ij |a_ij - b_ij| <= tol
bool approx_equal(const ComplexMatrix& a, const ComplexMatrix& b, double tol);

// commutator [a, b] = ab - ba
ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b);

// Text format. Line 1: the dimension n. Lines 2..n+1: n entries "re,im"
// separated by single spaces. Doubles are printed in shortest round-trip
// decimal form, so write -> read reproduces the matrix bit for bit.
std::string format_double(double v);
std::string to_text(const ComplexMatrix& m);
ComplexMatrix from_text(const std::string& text);

// File wrappers; read throws MatrixFileMissing when the path does not exist
// and Error on malformed content.
ComplexMatrix read_matrix_file(const std::string& path);
void write_matrix_file(const ComplexMatrix& m, const std::string& path);

}  // namespace opcalc
