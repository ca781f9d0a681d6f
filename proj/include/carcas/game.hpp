#pragma once

#include <cmath>
#include <stdexcept>

namespace carcas {

// The two players of a match. Every search module takes the reward from
// the perspective of its root player; sign flips for opponent decisions
// happen inside the search, never here.
enum class PlayerId : int { P1 = 0, P2 = 1 };

inline constexpr PlayerId opponent(PlayerId p) {
    return p == PlayerId::P1 ? PlayerId::P2 : PlayerId::P1;
}

inline constexpr int player_index(PlayerId p) { return static_cast<int>(p); }

inline constexpr const char* player_name(PlayerId p) {
    return p == PlayerId::P1 ? "P1" : "P2";
}

// R1 maps win/draw/loss to +1/0/-1; R2 is the raw final-score difference.
enum class RewardSystem { R1, R2 };

struct GameOutcome {
    int score_p1 = 0;
    int score_p2 = 0;
    bool terminal = false;
};

using Reward = double;

inline Reward reward(const GameOutcome& outcome, PlayerId perspective, RewardSystem system) {
    if (!outcome.terminal) {
        throw std::logic_error("reward: outcome is not terminal");
    }
    const int own = perspective == PlayerId::P1 ? outcome.score_p1 : outcome.score_p2;
    const int other = perspective == PlayerId::P1 ? outcome.score_p2 : outcome.score_p1;
    if (system == RewardSystem::R2) {
        return static_cast<Reward>(own - other);
    }
    if (own > other) return 1.0;
    if (own < other) return -1.0;
    return 0.0;
}

}  // namespace carcas
