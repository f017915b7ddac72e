#pragma once

#include <vector>

namespace mcflab {

// Cached trigonometric tables for an inclusive lat-long grid:
// theta_i = i * pi / (nt - 1) including both poles, phi_j = 2*pi*j / np.
struct GraphGrid {
    int nt = 0, np = 0;
    double dth = 0, dph = 0;
    std::vector<double> theta, sin_t, cos_t;
    std::vector<double> sin_p, cos_p;

    static const GraphGrid& get(int nt, int np);
};

inline int wrap(int j, int np) { return (j % np + np) % np; }

}  // namespace mcflab
