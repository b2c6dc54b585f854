#include "arcus/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "arcus/error.hpp"

namespace arcus {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t n = rows.size();
    const std::size_t m = n == 0 ? 0 : rows.begin()->size();
    Matrix out(n, m);
    std::size_t r = 0;
    for (const auto& row : rows) {
        if (row.size() != m) {
            throw DimensionError("Matrix::from_rows: ragged rows");
        }
        std::copy(row.begin(), row.end(), out.row(r).begin());
        ++r;
    }
    return out;
}

Matrix Matrix::slice_rows(std::size_t first, std::size_t count) const {
    if (first + count > rows_) {
        throw DimensionError("Matrix::slice_rows: range past end");
    }
    Matrix out(count, cols_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_), count * cols_,
                out.data_.begin());
    return out;
}

void Matrix::append_rows(const Matrix& other) {
    if (rows_ == 0 && cols_ == 0) {
        *this = other;
        return;
    }
    if (other.cols_ != cols_) {
        throw DimensionError("Matrix::append_rows: column count mismatch");
    }
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    rows_ += other.rows_;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace arcus
