// SPDX-FileCopyrightText: Copyright (c) 2026 The GRASSY Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "grassy/kernels.hpp"

namespace grassy::kernels::detail {

#if defined(GRASSY_HAVE_AVX2_TU)
const KernelTable& avx2_table_unchecked();
#endif

}  // namespace grassy::kernels::detail
