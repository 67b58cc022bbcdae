#pragma once

#include <vector>

#include "cloudheight/raster.hpp"
#include "oracles.hpp"

namespace testsupport {

inline cloudheight::SuperImage to_super(const oracle::Instance& inst)
{
    std::vector<cloudheight::Patch> patches;
    for (std::size_t k = 0; k < inst.blocks.size(); ++k) {
        cloudheight::Patch p;
        for (const auto& q : inst.blocks[k])
            p.coords.push_back({q.row, q.col});
        p.values = inst.values[k];
        patches.push_back(std::move(p));
    }
    return cloudheight::interlace(patches);
}

// n jittered rows x cols grids, each camera offset by a random sub-pixel row shift.
inline oracle::Instance random_instance(oracle::Gen& g, std::size_t n, long rows, long cols)
{
    oracle::Instance inst;
    for (std::size_t k = 0; k < n; ++k) {
        inst.blocks.push_back(oracle::jittered_grid(g, rows, cols, 0.2, g.uniform(-0.5, 0.5)));
        Eigen::VectorXd v(rows * cols);
        for (Eigen::Index i = 0; i < v.size(); ++i)
            v(i) = g.normal();
        inst.values.push_back(v);
    }
    return inst;
}

// n blocks of m uniformly scattered points in a 4 x 4 square.
inline oracle::Instance scattered_instance(oracle::Gen& g, std::size_t n, std::size_t m)
{
    oracle::Instance inst;
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<oracle::Pt> pts;
        Eigen::VectorXd v(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            pts.push_back({g.uniform(0, 4), g.uniform(0, 4)});
            v(static_cast<Eigen::Index>(i)) = g.normal();
        }
        inst.blocks.push_back(pts);
        inst.values.push_back(v);
    }
    return inst;
}

}  // namespace testsupport
