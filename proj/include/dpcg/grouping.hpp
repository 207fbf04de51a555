#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpcg/dense.hpp"
#include "dpcg/sparse.hpp"

namespace dpcg {

/// Disjoint cover of the dof indices {0..n_total-1}; every set sorted and
/// non-empty.
struct IndexSets {
    std::vector<std::vector<std::size_t>> sets;
    std::size_t n_total = 0;

    std::size_t count() const { return sets.size(); }
    void validate() const;

    std::string to_json() const;
    static IndexSets from_json(const std::string& text);
};

/// One set per distinct label, ordered by first appearance.
IndexSets groups_from_labels(const std::vector<int>& labels);

/// Recursive coordinate bisection: split along the widest axis at the
/// size-proportional quantile. Deterministic; produces sizes within one of
/// each other at every bisection level.
IndexSets partition_graph(const SparseMatrix& A, const DenseMatrix& coords, std::size_t S);

struct KmeansOptions {
    std::uint64_t seed = 0;
    std::size_t max_iter = 100;
};

/// Lloyd iterations with k-means++ seeding; empty clusters are repaired by
/// splitting the largest cluster at its farthest member. Distance ties go
/// to the lowest centroid index.
IndexSets kmeans_groups(const DenseMatrix& features, std::size_t S, const KmeansOptions& opts = {});

}  // namespace dpcg
