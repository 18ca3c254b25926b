// Copyright (c) 2026 The gelcal authors.
// SPDX-License-Identifier: Apache-2.0

#include "gelcal/rng.hpp"

#include "gelcal/inference.hpp"

namespace gelcal {

double RngStream::next_normal() { return normal_quantile(next_uniform()); }

}  // namespace gelcal
