#pragma once

#include "tiam/matrix.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace tiam {

/// Features in columns (d x N) with one integer label per column.
struct Dataset {
    DenseMatrix x;
    std::vector<std::size_t> labels;
    std::size_t classes = 0;
    std::string name;

    std::size_t num_samples() const { return x.cols(); }
    std::size_t num_features() const { return x.rows(); }
    /// Throws InputError when a label is out of range, N == 0, or a feature is non-finite.
    void validate() const;
};

/// C x N matrix with a single 1 per column at the label's row.
DenseMatrix one_hot(const std::vector<std::size_t>& labels, std::size_t classes);

}  // namespace tiam
