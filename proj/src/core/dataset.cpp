#include "tiam/dataset.hpp"

#include "tiam/errors.hpp"

#include <cmath>

namespace tiam {

void Dataset::validate() const {
    if (x.cols() == 0) throw InputError("dataset '" + name + "' has no samples");
    if (labels.size() != x.cols())
        throw InputError("dataset '" + name + "': " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(x.cols()) + " samples");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= classes)
            throw InputError("dataset '" + name + "': label " + std::to_string(labels[i]) +
                             " at sample " + std::to_string(i) + " outside [0, " +
                             std::to_string(classes) + ")");
    if (!all_finite(x)) throw InputError("dataset '" + name + "' has non-finite features");
}

DenseMatrix one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
    DenseMatrix y(classes, labels.size());
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] >= classes)
            throw InputError("one_hot: label " + std::to_string(labels[j]) + " at column " +
                             std::to_string(j) + " outside [0, " + std::to_string(classes) + ")");
        y(labels[j], j) = 1.0;
    }
    return y;
}

}  // namespace tiam
