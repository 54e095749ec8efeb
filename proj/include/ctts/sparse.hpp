#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ctts/common.hpp"
#include "ctts/tensor.hpp"

namespace ctts::sparse {

// Fixed serialized header size used by footprint accounting: rows, cols,
// block_rows, block_cols, kept count, dtype tag and padding.
constexpr size_t kSparseHeaderBytes = 32;
constexpr size_t kBlockIndexBytes = 4;  // one u32 linear block index per kept block

// Block-compressed matrix. Only surviving blocks are stored; kept_blocks is
// strictly sorted by (block_row, block_col) and block_data holds the dense
// values of each kept block in that order, row-major within the block.
struct BlockSparseMatrix {
    int64_t rows = 0, cols = 0;
    int64_t block_rows = 16, block_cols = 1;
    std::vector<std::pair<int32_t, int32_t>> kept_blocks;
    std::vector<float> block_data;

    int64_t grid_rows() const { return rows / block_rows; }
    int64_t grid_cols() const { return cols / block_cols; }
    int64_t block_numel() const { return block_rows * block_cols; }
};

// Keep/prune decision per block of a matrix.
struct BlockMask {
    int64_t block_rows = 16, block_cols = 1;
    int64_t grid_rows = 0, grid_cols = 0;
    std::vector<uint8_t> keep;  // grid_rows * grid_cols, row-major

    bool kept(int64_t br, int64_t bc) const {
        return keep[static_cast<size_t>(br * grid_cols + bc)] != 0;
    }
};

// Progressive sparsity ramp: zero before t_start, cubic rise to s_final at
// t_end, flat afterwards.
struct PruneSchedule {
    int64_t t_start = 0;
    int64_t t_end = 1;
    double s_final = 0.0;  // in [0, 1)
    static constexpr int exponent = 3;
};

double sparsity_at(const PruneSchedule& sched, int64_t t);

// Magnitude pruning: blocks are ranked by mean absolute value and the
// floor(target * n_blocks) lowest-ranked are zeroed. Ties break by
// (block_row, block_col), lower index pruned first.
std::pair<BlockMask, TensorF32> prune(const TensorF32& w, double target, int64_t block_rows,
                                      int64_t block_cols);

BlockSparseMatrix to_block_sparse(const TensorF32& w_masked, const BlockMask& mask);

TensorF32 densify(const BlockSparseMatrix& m);

// y = M * x visiting kept blocks only.
std::vector<float> sparse_matvec(const BlockSparseMatrix& m, const std::vector<float>& x);

// Serialized size at a given value dtype: header + one u32 index per kept
// block + block values.
size_t sparse_footprint_bytes(const BlockSparseMatrix& m, Dtype dtype);

// Fraction of blocks actually pruned by a mask.
double achieved_sparsity(const BlockMask& mask);

}  // namespace ctts::sparse
