#pragma once

#include <memory>
#include <vector>

#include "dpcg/dense.hpp"
#include "dpcg/grouping.hpp"
#include "dpcg/sparse.hpp"

namespace dpcg {

enum class PrecondKind { identity, jacobi, ssor, icc0, asm_overlap };

struct PrecondOptions {
    double omega = 1.0;          // SSOR relaxation
    IndexSets subdomains;        // ASM: non-overlapping partition
    std::size_t overlap = 1;     // ASM: adjacency layers added per subdomain
    double icc_shift = 0.0;      // optional diagonal shift A + alpha I for ICC
};

/// SPD preconditioner with the uniform contract z = M r. Immutable after
/// construction; apply is pure.
class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    virtual Vector apply(const Vector& r) const = 0;
    virtual PrecondKind kind() const = 0;
    virtual std::size_t n() const = 0;
};

/// Factory covering Identity, Jacobi, SSOR(omega), IC(0), and one-level
/// additive Schwarz with exact dense subdomain solves.
std::unique_ptr<Preconditioner> build_preconditioner(const SparseMatrix& A, PrecondKind kind,
                                                     const PrecondOptions& opts = {});

}  // namespace dpcg
