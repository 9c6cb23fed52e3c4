#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mft/core.hpp"
#include "mft/detect.hpp"
#include "mft/limit.hpp"

namespace mft {

struct BootstrapResult {
    double q = 0.0;
    /// Statistic M of each replicate (-inf when a replicate was undecidable).
    std::vector<double> statistics;
    std::size_t block_len = 0;
};

/// Block bootstrap threshold. Blocks of consecutive intervals are drawn with
/// replacement until the rebuilt train covers T, the statistic M is recomputed
/// on each rebuilt train with the table's per-window standardization, and Q_b
/// is the (1 - alpha)-quantile of the replicate statistics.
///
/// Experimental: the block length has no principled default beyond 10 (m + 1).
BootstrapResult bootstrap_Q(const SpikeTrain& train, const WindowSet& windows, double alpha,
                            std::size_t block_len, std::size_t n_boot, std::size_t m,
                            std::uint64_t seed, const ThresholdTable& table,
                            const FieldOptions& field = {});

/// One rebuilt train; exposed for testing.
SpikeTrain block_resample(const std::vector<double>& intervals, double duration,
                          std::size_t block_len, Rng& rng);

}  // namespace mft
