#include "bpr/matrix.hpp"

#include <algorithm>

namespace bpr {

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= rows_) throw ShapeError("row index out of range");
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> indices) const {
    for (auto c : indices)
        if (c >= cols_) throw ShapeError("column index out of range");
    Matrix out(rows_, indices.size());
    for (std::size_t r = 0; r < rows_; ++r) {
        auto src = row(r);
        auto dst = out.row(r);
        for (std::size_t j = 0; j < indices.size(); ++j) dst[j] = src[indices[j]];
    }
    return out;
}

}  // namespace bpr
