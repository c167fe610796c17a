#pragma once

#include <memory>

#include "gradreduce/landscape.hpp"
#include "gradreduce/reduction.hpp"

namespace fixture {

using namespace gradreduce;

/// Default double well; certified Lipschitz 11 gives q = 0.6875 at m = 3.
inline Potential default_well() { return Potential::clamped_double_well(0.5, 1.0, 2.5, 11.0); }

/// Shallow well whose Lipschitz constant (about 3.18) admits m = 1 and m = 2 on [0, pi].
inline Potential shallow_well() { return Potential::clamped_double_well(0.8, 1.0, 1.4); }

inline std::shared_ptr<ReducedPotential> shallow_reduction(int m, int n_modes = 16) {
    return std::make_shared<ReducedPotential>(make_basis(M_PI, n_modes), shallow_well(), m);
}

/// Hermite table of the shallow reduced potential on [-r, r]^m.
inline std::shared_ptr<TabulatedLandscape> shallow_table(int m, double r, int intervals) {
    const auto rp = shallow_reduction(m);
    std::vector<TabulatedLandscape::Axis> axes(m, TabulatedLandscape::Axis{-r, r, intervals});
    return std::make_shared<TabulatedLandscape>(*rp, axes);
}

} // namespace fixture
