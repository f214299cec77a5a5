#include "fedcluster/attacks.hpp"

#include <cmath>
#include <stdexcept>

#include "fedcluster/rng.hpp"

namespace fedcluster {

bool is_attack(const AttackKind& kind) {
  return !std::holds_alternative<NoAttack>(kind);
}

Vector apply_attack(const AttackKind& kind, const Vector& honest_message,
                    const AttackContext& context) {
  if (const auto* lg = std::get_if<LargeGradient>(&kind)) {
    if (lg->scale <= 0.0) throw std::invalid_argument("LargeGradient scale must be positive");
    return scaled(honest_message, lg->scale);
  }
  if (std::holds_alternative<SignFlip>(kind)) {
    return scaled(honest_message, -1.0);
  }
  if (const auto* eob = std::get_if<EdgeOfBall>(&kind)) {
    if (eob->margin <= 0.0 || eob->margin >= 1.0) {
      throw std::invalid_argument("EdgeOfBall margin must be in (0,1)");
    }
    if (context.center == nullptr) {
      throw std::invalid_argument("EdgeOfBall attack needs the current center/radius context");
    }
    const Vector& v = *context.center;
    Vector u(v.size(), 0.0);
    if (context.true_mean != nullptr) {
      u = sub(v, *context.true_mean);  // push the estimate further from the truth
      const double len = norm(u);
      if (len > 0.0) {
        for (double& e : u) e /= len;
      } else {
        u[0] = 1.0;
      }
    } else {
      u[0] = 1.0;
    }
    Vector out(v);
    add_scaled(out, (1.0 - eob->margin) * context.radius, u);
    return out;
  }
  return honest_message;
}

std::vector<bool> ByzantineSchedule::flags(int num_clients, std::uint64_t seed) const {
  std::vector<bool> out(static_cast<std::size_t>(num_clients), false);
  const int count = static_cast<int>(beta * num_clients);
  if (count <= 0 || !is_attack(kind)) return out;
  RngStream rng(seed, {0, 0, purpose_tag(Purpose::kAttack)});
  for (int i : rng.sample_without_replacement(num_clients, count)) {
    out[static_cast<std::size_t>(i)] = true;
  }
  return out;
}

}  // namespace fedcluster
