#include "gridstab/ml/matrix.hpp"

#include "gridstab/error.hpp"

#include <algorithm>

namespace gridstab::ml {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        throw Error(ErrorKind::LengthMismatch, "matrix data does not match its shape");
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
    Matrix out(rows.size(), cols_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix feature_matrix(const Dataset& dataset) {
    return Matrix(dataset.size(), kFeatureCount, dataset.feature_matrix());
}

}  // namespace gridstab::ml
