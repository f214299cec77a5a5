#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "fedcluster/vec.hpp"

namespace fedcluster {

struct NoAttack {};

struct LargeGradient {
  double scale = 100.0;  // > 0
};

struct SignFlip {};

/// Worst-case placement just inside the clipping ball: v + (1-margin) tau u.
struct EdgeOfBall {
  double margin = 0.01;  // in (0, 1)
};

using AttackKind = std::variant<NoAttack, LargeGradient, SignFlip, EdgeOfBall>;

bool is_attack(const AttackKind& kind);

/// Clustering-time context for the omniscient edge-of-ball attacker.
struct AttackContext {
  const Vector* center = nullptr;       // current cluster-center estimate v
  double radius = 0.0;                  // current thresholding radius tau
  const Vector* true_mean = nullptr;    // optional direction hint
};

/// Transforms one honest message. EdgeOfBall requires a context with a
/// center; its direction is from the true mean toward the center when the
/// hint is present, otherwise the first axis.
Vector apply_attack(const AttackKind& kind, const Vector& honest_message,
                    const AttackContext& context);

/// Which clients are flagged malicious for a whole run: floor(beta N) of
/// them, chosen deterministically from the seed.
struct ByzantineSchedule {
  double beta = 0.0;
  AttackKind kind = NoAttack{};

  std::vector<bool> flags(int num_clients, std::uint64_t seed) const;
};

}  // namespace fedcluster
