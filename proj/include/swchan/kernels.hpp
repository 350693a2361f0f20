#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version with identical results; tests compare the two and
// bench/ times them.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace swchan::kernels {

enum class Exec { Serial, Parallel };

/// Compressed adjacency lists: the neighbors of row r are
/// targets[offsets[r] .. offsets[r+1]).
template <typename Weight>
struct Csr {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> targets;
  std::vector<Weight> weights;

  std::size_t rows() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

// out[r] = min_j (weights[j] + prev[targets[j]]) over row r; argmin[r] is the
// first minimizing target in row order. Rows with no entries, and entries
// whose prev value is the numeric max, yield the numeric max.

template <typename Weight>
void min_plus_step_serial(const Csr<Weight>& g, std::span<const Weight> prev, std::span<Weight> out,
                          std::span<std::uint32_t> argmin) {
  const std::size_t rows = g.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    Weight best = std::numeric_limits<Weight>::max();
    std::uint32_t arg = 0;
    for (std::size_t j = g.offsets[r]; j < g.offsets[r + 1]; ++j) {
      const Weight base = prev[g.targets[j]];
      if (base == std::numeric_limits<Weight>::max()) continue;
      const Weight v = g.weights[j] + base;
      if (v < best) {
        best = v;
        arg = g.targets[j];
      }
    }
    out[r] = best;
    if (!argmin.empty()) argmin[r] = arg;
  }
}

template <typename Weight>
void min_plus_step_parallel(const Csr<Weight>& g, std::span<const Weight> prev, std::span<Weight> out,
                            std::span<std::uint32_t> argmin) {
  const auto rows = static_cast<std::int64_t>(g.rows());
  const bool keep_arg = !argmin.empty();
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    Weight best = std::numeric_limits<Weight>::max();
    std::uint32_t arg = 0;
    for (std::size_t j = g.offsets[r]; j < g.offsets[r + 1]; ++j) {
      const Weight base = prev[g.targets[j]];
      if (base == std::numeric_limits<Weight>::max()) continue;
      const Weight v = g.weights[j] + base;
      if (v < best) {
        best = v;
        arg = g.targets[j];
      }
    }
    out[r] = best;
    if (keep_arg) argmin[r] = arg;
  }
}

template <typename Weight>
void min_plus_step(Exec exec, const Csr<Weight>& g, std::span<const Weight> prev, std::span<Weight> out,
                   std::span<std::uint32_t> argmin = {}) {
  if (exec == Exec::Parallel)
    min_plus_step_parallel(g, prev, out, argmin);
  else
    min_plus_step_serial(g, prev, out, argmin);
}

// y = A x for a 0/1 matrix stored as a pattern-only Csr (weights unused).

template <typename Weight>
void adjacency_matvec_serial(const Csr<Weight>& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t j = a.offsets[r]; j < a.offsets[r + 1]; ++j) acc += x[a.targets[j]];
    y[r] = acc;
  }
}

template <typename Weight>
void adjacency_matvec_parallel(const Csr<Weight>& a, std::span<const double> x, std::span<double> y) {
  const auto rows = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t j = a.offsets[r]; j < a.offsets[r + 1]; ++j) acc += x[a.targets[j]];
    y[r] = acc;
  }
}

template <typename Weight>
void adjacency_matvec(Exec exec, const Csr<Weight>& a, std::span<const double> x, std::span<double> y) {
  if (exec == Exec::Parallel)
    adjacency_matvec_parallel(a, x, y);
  else
    adjacency_matvec_serial(a, x, y);
}

/// mask[i] = pred(i) for i in [0, count).
template <typename Pred>
std::vector<char> evaluate_mask(Exec exec, std::uint64_t count, Pred pred) {
  std::vector<char> mask(count, 0);
  if (exec == Exec::Parallel) {
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t i = 0; i < n; ++i) mask[i] = pred(static_cast<std::uint64_t>(i)) ? 1 : 0;
  } else {
    for (std::uint64_t i = 0; i < count; ++i) mask[i] = pred(i) ? 1 : 0;
  }
  return mask;
}

/// Dense bitset rows: row v gets bit neighbor(v, k) set for every k in
/// [0, per_row). `words` is the number of 64-bit words per row.
template <typename Neighbor>
std::vector<std::uint64_t> materialize_rows(Exec exec, std::uint64_t vertices, std::size_t per_row,
                                            std::size_t words, Neighbor neighbor) {
  std::vector<std::uint64_t> bits(vertices * words, 0);
  auto fill = [&](std::uint64_t v) {
    std::uint64_t* row = bits.data() + v * words;
    for (std::size_t k = 0; k < per_row; ++k) {
      const std::uint64_t u = neighbor(v, k);
      row[u >> 6] |= std::uint64_t{1} << (u & 63);
    }
  };
  if (exec == Exec::Parallel) {
    const auto n = static_cast<std::int64_t>(vertices);
#pragma omp parallel for schedule(static)
    for (std::int64_t v = 0; v < n; ++v) fill(static_cast<std::uint64_t>(v));
  } else {
    for (std::uint64_t v = 0; v < vertices; ++v) fill(v);
  }
  return bits;
}

}  // namespace swchan::kernels
