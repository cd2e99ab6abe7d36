#pragma once

#include <string>

#include "reactgen/core.hpp"

namespace reactgen::plot {

// Stacked per-dimension traces of the speaker's coefficients against the
// generated listener reaction. Pure function of its inputs — fixed-precision
// numbers and no timestamps — so identical inputs render identical bytes.
std::string traces_svg(const MatD& speaker, const MatD& listener, int n_dims);

} // namespace reactgen::plot
