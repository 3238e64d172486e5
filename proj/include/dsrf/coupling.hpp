#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsrf/vec2.hpp"

namespace dsrf {

/// Source-target pair dataset with provenance: which reflow round produced
/// it, under which solver, from which seed.
struct Coupling {
    std::vector<Vec2> x0;
    std::vector<Vec2> x1;
    int round = 0;
    std::string generator;  // solver tag, e.g. "euler", "ds_project_2d"
    std::uint64_t seed = 0;

    std::size_t size() const { return x0.size(); }
    bool all_finite() const;
    void validate() const;  // nonempty, aligned, finite
};

/// Binary pair file: header "DSRFPAIR\n d=<int> n=<int>\n" then n records of
/// 2*d little-endian float64 (x0 then x1). Provenance fields are not stored.
void save_coupling(const Coupling& c, const std::string& path);
Coupling load_coupling(const std::string& path);

} // namespace dsrf
