#include "ctts/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ctts::sparse {

double sparsity_at(const PruneSchedule& sched, int64_t t) {
    if (sched.t_start >= sched.t_end) throw ArgumentError("schedule: t_start must precede t_end");
    if (t <= sched.t_start) return 0.0;
    if (t >= sched.t_end) return sched.s_final;
    const double frac = static_cast<double>(t - sched.t_start) /
                        static_cast<double>(sched.t_end - sched.t_start);
    const double rem = 1.0 - frac;
    return sched.s_final * (1.0 - rem * rem * rem);
}

std::pair<BlockMask, TensorF32> prune(const TensorF32& w, double target, int64_t block_rows,
                                      int64_t block_cols) {
    if (w.shape.size() != 2) throw ShapeError("prune: expected 2-D tensor");
    if (target < 0.0 || target >= 1.0) throw ArgumentError("prune: target must be in [0, 1)");
    const int64_t rows = w.shape[0], cols = w.shape[1];
    if (block_rows < 1 || block_cols < 1 || rows % block_rows != 0 || cols % block_cols != 0)
        throw ConfigError("prune: dims " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " not divisible by block " + std::to_string(block_rows) + "x" +
                          std::to_string(block_cols));

    BlockMask mask;
    mask.block_rows = block_rows;
    mask.block_cols = block_cols;
    mask.grid_rows = rows / block_rows;
    mask.grid_cols = cols / block_cols;
    const int64_t n_blocks = mask.grid_rows * mask.grid_cols;
    mask.keep.assign(static_cast<size_t>(n_blocks), 1);

    const int64_t n_prune = static_cast<int64_t>(std::floor(target * static_cast<double>(n_blocks)));
    TensorF32 masked = w;
    if (n_prune == 0) return {std::move(mask), std::move(masked)};

    // score = mean |value| per block; the divisor is shared so sums suffice
    std::vector<std::pair<double, int64_t>> ranked(static_cast<size_t>(n_blocks));
    for (int64_t br = 0; br < mask.grid_rows; ++br) {
        for (int64_t bc = 0; bc < mask.grid_cols; ++bc) {
            double sum = 0.0;
            for (int64_t r = 0; r < block_rows; ++r) {
                const float* row = w.row(br * block_rows + r) + bc * block_cols;
                for (int64_t c = 0; c < block_cols; ++c) sum += std::fabs(row[c]);
            }
            const int64_t idx = br * mask.grid_cols + bc;
            ranked[static_cast<size_t>(idx)] = {sum, idx};
        }
    }
    std::sort(ranked.begin(), ranked.end());  // score asc, then linear index asc

    for (int64_t i = 0; i < n_prune; ++i) {
        const int64_t idx = ranked[static_cast<size_t>(i)].second;
        mask.keep[static_cast<size_t>(idx)] = 0;
        const int64_t br = idx / mask.grid_cols, bc = idx % mask.grid_cols;
        for (int64_t r = 0; r < block_rows; ++r) {
            float* row = masked.row(br * block_rows + r) + bc * block_cols;
            for (int64_t c = 0; c < block_cols; ++c) row[c] = 0.0f;
        }
    }
    return {std::move(mask), std::move(masked)};
}

BlockSparseMatrix to_block_sparse(const TensorF32& w_masked, const BlockMask& mask) {
    if (w_masked.shape.size() != 2) throw ShapeError("to_block_sparse: expected 2-D tensor");
    const int64_t rows = w_masked.shape[0], cols = w_masked.shape[1];
    if (rows != mask.grid_rows * mask.block_rows || cols != mask.grid_cols * mask.block_cols)
        throw ArgumentError("to_block_sparse: mask inconsistent with tensor dims");

    BlockSparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.block_rows = mask.block_rows;
    m.block_cols = mask.block_cols;
    for (int64_t br = 0; br < mask.grid_rows; ++br) {
        for (int64_t bc = 0; bc < mask.grid_cols; ++bc) {
            if (!mask.kept(br, bc)) continue;
            m.kept_blocks.emplace_back(static_cast<int32_t>(br), static_cast<int32_t>(bc));
            for (int64_t r = 0; r < m.block_rows; ++r) {
                const float* row = w_masked.row(br * m.block_rows + r) + bc * m.block_cols;
                m.block_data.insert(m.block_data.end(), row, row + m.block_cols);
            }
        }
    }
    return m;
}

TensorF32 densify(const BlockSparseMatrix& m) {
    TensorF32 out = TensorF32::zeros({m.rows, m.cols});
    const float* src = m.block_data.data();
    for (const auto& [br, bc] : m.kept_blocks) {
        for (int64_t r = 0; r < m.block_rows; ++r) {
            float* row = out.row(static_cast<int64_t>(br) * m.block_rows + r) +
                         static_cast<int64_t>(bc) * m.block_cols;
            for (int64_t c = 0; c < m.block_cols; ++c) row[c] = *src++;
        }
    }
    return out;
}

std::vector<float> sparse_matvec(const BlockSparseMatrix& m, const std::vector<float>& x) {
    if (static_cast<int64_t>(x.size()) != m.cols)
        throw ShapeError("sparse_matvec: length mismatch");
    std::vector<float> out(static_cast<size_t>(m.rows), 0.0f);
    const float* src = m.block_data.data();
    if (m.block_cols == 1) {
        // Hot path for the 16x1 vocoder layout: each block scales one input
        // element into a contiguous run of output rows. Same accumulation
        // order as the general loop, so results are bit-identical.
        const int64_t rows = m.block_rows;
        for (const auto& [br, bc] : m.kept_blocks) {
            float* dst = out.data() + static_cast<int64_t>(br) * rows;
            const float xv = x[static_cast<size_t>(bc)];
            for (int64_t r = 0; r < rows; ++r) dst[r] += src[r] * xv;
            src += rows;
        }
        return out;
    }
    for (const auto& [br, bc] : m.kept_blocks) {
        const int64_t r0 = static_cast<int64_t>(br) * m.block_rows;
        const int64_t c0 = static_cast<int64_t>(bc) * m.block_cols;
        for (int64_t r = 0; r < m.block_rows; ++r) {
            float acc = 0.0f;
            for (int64_t c = 0; c < m.block_cols; ++c)
                acc += src[r * m.block_cols + c] * x[static_cast<size_t>(c0 + c)];
            out[static_cast<size_t>(r0 + r)] += acc;
        }
        src += m.block_numel();
    }
    return out;
}

size_t sparse_footprint_bytes(const BlockSparseMatrix& m, Dtype dtype) {
    const size_t n_kept = m.kept_blocks.size();
    return kSparseHeaderBytes + n_kept * kBlockIndexBytes +
           n_kept * static_cast<size_t>(m.block_numel()) * dtype_bytes(dtype);
}

double achieved_sparsity(const BlockMask& mask) {
    size_t pruned = 0;
    for (uint8_t k : mask.keep) pruned += (k == 0);
    return static_cast<double>(pruned) / static_cast<double>(mask.keep.size());
}

}  // namespace ctts::sparse
