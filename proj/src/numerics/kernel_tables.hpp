#pragma once

#include "tiam/kernels.hpp"

namespace tiam::kernels::detail {

extern const KernelTable kScalarTable;
#if defined(TIAM_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace tiam::kernels::detail
