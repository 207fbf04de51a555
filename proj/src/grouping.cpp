#include "dpcg/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace dpcg {

void IndexSets::validate() const {
    std::vector<std::uint8_t> seen(n_total, 0);
    std::size_t total = 0;
    for (const auto& s : sets) {
        if (s.empty()) throw std::runtime_error("IndexSets: empty group");
        for (std::size_t k = 0; k < s.size(); ++k) {
            if (s[k] >= n_total) throw std::runtime_error("IndexSets: index out of range");
            if (k > 0 && s[k - 1] >= s[k]) throw std::runtime_error("IndexSets: set not sorted");
            if (seen[s[k]]) throw std::runtime_error("IndexSets: sets not disjoint");
            seen[s[k]] = 1;
        }
        total += s.size();
    }
    if (total != n_total) throw std::runtime_error("IndexSets: union does not cover all dofs");
}

std::string IndexSets::to_json() const {
    nlohmann::json j;
    j["n_total"] = n_total;
    j["sets"] = sets;
    return j.dump();
}

IndexSets IndexSets::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    IndexSets out;
    out.n_total = j.at("n_total").get<std::size_t>();
    out.sets = j.at("sets").get<std::vector<std::vector<std::size_t>>>();
    out.validate();
    return out;
}

IndexSets groups_from_labels(const std::vector<int>& labels) {
    if (labels.empty()) throw std::invalid_argument("groups_from_labels: empty label list");
    std::map<int, std::size_t> slot;  // label -> set index, by first appearance
    IndexSets out;
    out.n_total = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = slot.find(labels[i]);
        if (it == slot.end()) {
            it = slot.emplace(labels[i], out.sets.size()).first;
            out.sets.emplace_back();
        }
        out.sets[it->second].push_back(i);
    }
    out.validate();
    return out;
}

namespace {

void rcb_split(const DenseMatrix& coords, std::vector<std::size_t>& ids, std::size_t S,
               std::vector<std::vector<std::size_t>>& out) {
    if (S == 1) {
        std::sort(ids.begin(), ids.end());
        out.push_back(std::move(ids));
        return;
    }
    const std::size_t d = coords.cols();

    // Widest axis of the current point set.
    std::size_t axis = 0;
    double best_span = -1.0;
    for (std::size_t c = 0; c < d; ++c) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t id : ids) {
            lo = std::min(lo, coords(id, c));
            hi = std::max(hi, coords(id, c));
        }
        if (hi - lo > best_span) {
            best_span = hi - lo;
            axis = c;
        }
    }

    // Ties resolved by the full coordinate tuple so the cut depends only on
    // geometry, not on node numbering.
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
        if (coords(a, axis) != coords(b, axis)) return coords(a, axis) < coords(b, axis);
        for (std::size_t c = 0; c < d; ++c)
            if (coords(a, c) != coords(b, c)) return coords(a, c) < coords(b, c);
        return a < b;
    });

    const std::size_t s_left = (S + 1) / 2;
    const std::size_t cut = (ids.size() * s_left + S / 2) / S;  // proportional, rounded
    std::vector<std::size_t> left(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<std::size_t> right(ids.begin() + static_cast<std::ptrdiff_t>(cut), ids.end());
    rcb_split(coords, left, s_left, out);
    rcb_split(coords, right, S - s_left, out);
}

}  // namespace

IndexSets partition_graph(const SparseMatrix& A, const DenseMatrix& coords, std::size_t S) {
    const std::size_t n = A.n;
    if (coords.rows() != n) throw std::invalid_argument("partition_graph: coords do not match A");
    if (S < 1 || S > n) throw std::invalid_argument("partition_graph: need 1 <= S <= n");

    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    IndexSets out;
    out.n_total = n;
    rcb_split(coords, ids, S, out.sets);
    out.validate();
    return out;
}

IndexSets kmeans_groups(const DenseMatrix& features, std::size_t S, const KmeansOptions& opts) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (S < 1) throw std::invalid_argument("kmeans_groups: need S >= 1");

    {
        std::set<std::vector<double>> distinct;
        for (std::size_t i = 0; i < n && distinct.size() < S; ++i) distinct.insert(features.row(i));
        if (distinct.size() < S)
            throw std::invalid_argument("kmeans_groups: S exceeds the number of distinct feature vectors");
    }

    auto dist2 = [&](std::size_t i, const Vector& c) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double diff = features(i, k) - c[k];
            s += diff * diff;
        }
        return s;
    };

    // k-means++ seeding.
    Rng rng(opts.seed);
    std::vector<Vector> centroids;
    centroids.push_back(features.row(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - 1)))));
    std::vector<double> mind(n);
    while (centroids.size() < S) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) best = std::min(best, dist2(i, c));
            mind[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += mind[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            // All points coincide with existing centroids; pick any fresh one.
            for (std::size_t i = 0; i < n; ++i)
                if (mind[i] > 0.0) {
                    pick = i;
                    break;
                }
        }
        centroids.push_back(features.row(pick));
    }

    std::vector<std::size_t> assign(n, 0);
    auto assign_all = [&]() {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double bestd = dist2(i, centroids[0]);
            for (std::size_t c = 1; c < S; ++c) {
                const double dd = dist2(i, centroids[c]);
                if (dd < bestd) {  // strict: ties keep the lowest index
                    bestd = dd;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        return changed;
    };

    assign_all();
    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        // Recompute centroids.
        std::vector<Vector> sums(S, Vector(d, 0.0));
        std::vector<std::size_t> counts(S, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) sums[assign[i]][k] += features(i, k);
            counts[assign[i]]++;
        }
        for (std::size_t c = 0; c < S; ++c) {
            if (counts[c] == 0) {
                // Split the largest cluster at its farthest member.
                std::size_t big = 0;
                for (std::size_t c2 = 1; c2 < S; ++c2)
                    if (counts[c2] > counts[big]) big = c2;
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (assign[i] != big) continue;
                    const double dd = dist2(i, centroids[big]);
                    if (dd > far_d) {
                        far_d = dd;
                        far_i = i;
                    }
                }
                centroids[c] = features.row(far_i);
                continue;
            }
            for (std::size_t k = 0; k < d; ++k)
                centroids[c][k] = sums[c][k] / static_cast<double>(counts[c]);
        }
        if (!assign_all()) break;  // Lloyd fixed point
    }

    IndexSets out;
    out.n_total = n;
    out.sets.resize(S);
    for (std::size_t i = 0; i < n; ++i) out.sets[assign[i]].push_back(i);
    // A repaired-but-still-empty cluster cannot satisfy the cover contract.
    for (const auto& s : out.sets)
        if (s.empty())
            throw std::runtime_error("kmeans_groups: empty cluster after repair; reduce S");
    out.validate();
    return out;
}

}  // namespace dpcg
