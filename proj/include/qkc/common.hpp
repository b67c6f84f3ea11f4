#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qkc {

using cx = std::complex<double>;

// Dense row-major complex matrix.  Used for gate unitaries, Kraus operators,
// and density matrices; sized at runtime (dim is 2 or 4 for gates, 2^n for
// density matrices).
struct cmatrix {
    int rows = 0;
    int cols = 0;
    std::vector<cx> data;

    cmatrix() = default;
    cmatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c) {}

    static cmatrix identity(int n) {
        cmatrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    cx& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    const cx& at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    cmatrix dagger() const {
        cmatrix m(cols, rows);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) m.at(c, r) = std::conj(at(r, c));
        return m;
    }

    cmatrix operator*(const cmatrix& o) const {
        if (cols != o.rows) throw std::invalid_argument("cmatrix: shape mismatch in product");
        cmatrix m(rows, o.cols);
        for (int r = 0; r < rows; ++r)
            for (int k = 0; k < cols; ++k) {
                cx a = at(r, k);
                if (a == cx{}) continue;
                for (int c = 0; c < o.cols; ++c) m.at(r, c) += a * o.at(k, c);
            }
        return m;
    }
};

// Round-trip-safe decimal rendering of a double (17 significant digits).
std::string format_double(double v);

// Parses a double, rejecting trailing garbage.
double parse_double(const std::string& tok);

}  // namespace qkc
