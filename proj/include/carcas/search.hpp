#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "carcas/engine.hpp"
#include "carcas/expression.hpp"
#include "carcas/game.hpp"
#include "carcas/rng.hpp"

namespace carcas {

// The searches are generic over a game-traits type so that the tree
// machinery can be exercised on small deterministic games in tests;
// Carcassonne is the production instantiation.
template <typename G>
concept SearchableGame = requires(typename G::State& ms, const typename G::State& s,
                                  const typename G::Action& a,
                                  std::vector<typename G::Action>& buf, Rng& rng) {
    { G::is_terminal(s) } -> std::convertible_to<bool>;
    { G::to_move(s) } -> std::convertible_to<PlayerId>;
    { G::legal_actions_into(s, buf) };
    { G::apply(ms, a) };
    { G::outcome(s) } -> std::convertible_to<GameOutcome>;
    { G::randomize_chance(ms, rng) };
    { G::prepare_simulation(ms) };
    { G::action_key(s, a) } -> std::convertible_to<std::uint64_t>;
};

struct CarcassonneGame {
    using State = GameState;
    using Action = carcas::Action;
    static bool is_terminal(const State& s) { return carcas::is_terminal(s); }
    static PlayerId to_move(const State& s) { return s.to_move; }
    static void legal_actions_into(const State& s, std::vector<Action>& buf) {
        carcas::legal_actions_into(s, buf);
    }
    static void apply(State& s, const Action& a) { apply_in_place(s, a); }
    static GameOutcome outcome(const State& s) { return final_scoring(s); }
    static void randomize_chance(State& s, Rng& rng) { reshuffle_deck(s, rng); }
    static void prepare_simulation(State& s) { reserve_for_play(s); }
    // Children are keyed by (tile kind, placement, meeple slot) so that
    // statistics never mix actions belonging to different sampled tiles.
    static std::uint64_t action_key(const State& s, const Action& a) {
        return (static_cast<std::uint64_t>(static_cast<std::uint8_t>(s.drawn)) << 24) |
               (static_cast<std::uint64_t>(static_cast<std::uint8_t>(a.pos.x + 128)) << 16) |
               (static_cast<std::uint64_t>(static_cast<std::uint8_t>(a.pos.y + 128)) << 8) |
               (static_cast<std::uint64_t>(a.rot) << 4) |
               static_cast<std::uint64_t>(static_cast<std::uint8_t>(a.meeple_slot + 1));
    }
};

struct AmafStat {
    int visits = 0;
    double value_sum = 0.0;
    double mean() const { return visits > 0 ? value_sum / visits : 0.0; }
};

template <SearchableGame G>
struct SearchTree {
    struct Node {
        std::uint64_t key_in = 0;  // action key that led here (0 for root)
        PlayerId to_move = PlayerId::P1;
        int visits = 0;
        double value_sum = 0.0;
        std::unordered_map<std::uint64_t, std::int32_t> children;
        std::unordered_map<std::uint64_t, AmafStat> amaf;
        double q() const { return value_sum / visits; }
    };

    std::vector<Node> nodes;
    PlayerId root_player = PlayerId::P1;

    explicit SearchTree(PlayerId to_move_at_root) : root_player(to_move_at_root) {
        Node root;
        root.to_move = to_move_at_root;
        nodes.push_back(std::move(root));
    }
};

// Blended RAVE action value. When the AMAF count is zero the blend
// weight is forced to zero so the estimate falls back to plain UCT.
inline double rave_value(double q, double q_tilde, int amaf_visits, int n_s, int n_sa, double k,
                         double b_tilde) {
    double beta = std::sqrt(b_tilde / (3.0 * n_s + b_tilde));
    if (amaf_visits == 0) beta = 0.0;
    return (1.0 - beta) * q + beta * q_tilde +
           2.0 * k * std::sqrt(2.0 * std::log(static_cast<double>(n_s)) / n_sa);
}

// Selection policy driven by an expression over (Q, N(s), N(s,a)).
struct ExpressionPolicy {
    const Expression* expr = nullptr;
    bool normalize_q = false;
    static constexpr bool kUsesAmaf = false;

    template <typename Node>
    double score(const Node& parent, const Node& child, double sign, double q_scale) const {
        SelectionContext ctx;
        ctx.q_sa = sign * child.q() / (normalize_q ? q_scale : 1.0);
        ctx.n_s = static_cast<double>(parent.visits);
        ctx.n_sa = static_cast<double>(child.visits);
        return evaluate(*expr, ctx);
    }
};

struct RavePolicy {
    double k = 0.5;
    double b_tilde = 10.0;
    static constexpr bool kUsesAmaf = true;

    template <typename Node>
    double score(const Node& parent, const Node& child, double sign, double) const {
        const auto it = parent.amaf.find(child.key_in);
        const int nt = it == parent.amaf.end() ? 0 : it->second.visits;
        const double qt = it == parent.amaf.end() ? 0.0 : it->second.mean();
        return rave_value(sign * child.q(), sign * qt, nt, parent.visits, child.visits, k,
                          b_tilde);
    }
};

// Picks the best child of `node_idx` among `keys` under the policy.
// Every key must already be expanded; ties break uniformly at random.
template <SearchableGame G, typename Policy>
int select_child(SearchTree<G>& tree, int node_idx, const std::vector<std::uint64_t>& keys,
                 const Policy& policy, double q_scale, Rng& rng) {
    auto& node = tree.nodes[static_cast<std::size_t>(node_idx)];
    const double sign = node.to_move == tree.root_player ? 1.0 : -1.0;
    double best = 0.0;
    std::vector<int> best_children;
    for (const std::uint64_t key : keys) {
        const int child_idx = node.children.at(key);
        const double s =
            policy.score(node, tree.nodes[static_cast<std::size_t>(child_idx)], sign, q_scale);
        if (best_children.empty() || s > best) {
            best = s;
            best_children.assign(1, child_idx);
        } else if (s == best) {
            best_children.push_back(child_idx);
        }
    }
    if (best_children.empty()) throw std::logic_error("select_child: no candidates");
    return best_children.size() == 1
               ? best_children[0]
               : best_children[static_cast<std::size_t>(
                     rng.uniform_int(static_cast<int>(best_children.size())))];
}

// Uniform-random continuation to the end of the game; returns the
// reward of the final outcome from `perspective`.
template <SearchableGame G>
Reward rollout(typename G::State& state, PlayerId perspective, RewardSystem system, Rng& rng,
               std::vector<typename G::Action>& buf,
               std::vector<std::pair<std::uint64_t, PlayerId>>* trace = nullptr) {
    while (!G::is_terminal(state)) {
        G::legal_actions_into(state, buf);
        if (buf.empty()) throw std::logic_error("rollout: stuck non-terminal state");
        const auto& a = buf[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(buf.size())))];
        if (trace) trace->emplace_back(G::action_key(state, a), G::to_move(state));
        G::apply(state, a);
    }
    return reward(G::outcome(state), perspective, system);
}

struct SimulationScratch {
    std::vector<int> path;
    std::vector<std::pair<std::uint64_t, PlayerId>> actions;  // (key, actor)
    std::vector<int> untried;
    std::vector<std::uint64_t> keys;
    std::vector<std::uint64_t> seen;
};

// One full MCTS iteration: descend the tree (expanding one child where
// possible), roll out to completion, back-propagate from the root
// player's perspective, and update AMAF statistics when the policy
// uses them. Future chance events are re-sampled on every call.
template <SearchableGame G, typename Policy>
Reward run_simulation(SearchTree<G>& tree, const typename G::State& root_state,
                      const Policy& policy, RewardSystem system, Rng& rng, double& q_scale,
                      std::vector<typename G::Action>& buf, SimulationScratch& scratch,
                      std::ostream* trace = nullptr) {
    typename G::State sim = root_state;
    G::prepare_simulation(sim);
    G::randomize_chance(sim, rng);

    scratch.path.assign(1, 0);
    scratch.actions.clear();
    Reward value = 0.0;
    int node_idx = 0;
    while (true) {
        if (G::is_terminal(sim)) {
            value = reward(G::outcome(sim), tree.root_player, system);
            break;
        }
        G::legal_actions_into(sim, buf);
        if (buf.empty()) throw std::logic_error("search: stuck non-terminal state");
        auto& node = tree.nodes[static_cast<std::size_t>(node_idx)];
        scratch.untried.clear();
        scratch.keys.clear();
        for (std::size_t i = 0; i < buf.size(); ++i) {
            const std::uint64_t key = G::action_key(sim, buf[i]);
            scratch.keys.push_back(key);
            if (!node.children.contains(key)) scratch.untried.push_back(static_cast<int>(i));
        }
        if (!scratch.untried.empty()) {
            const int pick = scratch.untried[static_cast<std::size_t>(
                rng.uniform_int(static_cast<int>(scratch.untried.size())))];
            const std::uint64_t key = scratch.keys[static_cast<std::size_t>(pick)];
            const PlayerId actor = G::to_move(sim);
            G::apply(sim, buf[static_cast<std::size_t>(pick)]);
            typename SearchTree<G>::Node child;
            child.key_in = key;
            child.to_move = G::to_move(sim);
            tree.nodes.push_back(std::move(child));
            const int child_idx = static_cast<int>(tree.nodes.size() - 1);
            tree.nodes[static_cast<std::size_t>(node_idx)].children.emplace(key, child_idx);
            scratch.path.push_back(child_idx);
            scratch.actions.emplace_back(key, actor);
            value = rollout<G>(sim, tree.root_player, system, rng, buf, &scratch.actions);
            break;
        }
        const int child_idx = select_child(tree, node_idx, scratch.keys, policy, q_scale, rng);
        const auto& child = tree.nodes[static_cast<std::size_t>(child_idx)];
        for (std::size_t i = 0; i < buf.size(); ++i) {
            if (scratch.keys[i] == child.key_in) {
                scratch.actions.emplace_back(child.key_in, G::to_move(sim));
                G::apply(sim, buf[i]);
                break;
            }
        }
        scratch.path.push_back(child_idx);
        node_idx = child_idx;
    }

    for (const int idx : scratch.path) {
        auto& n = tree.nodes[static_cast<std::size_t>(idx)];
        n.visits += 1;
        n.value_sum += value;
    }
    if constexpr (Policy::kUsesAmaf) {
        for (std::size_t t = 0; t < scratch.path.size(); ++t) {
            auto& n = tree.nodes[static_cast<std::size_t>(scratch.path[t])];
            scratch.seen.clear();
            for (std::size_t u = t; u < scratch.actions.size(); ++u) {
                if (scratch.actions[u].second != n.to_move) continue;
                const std::uint64_t key = scratch.actions[u].first;
                bool dup = false;
                for (const std::uint64_t s : scratch.seen) {
                    if (s == key) {
                        dup = true;
                        break;
                    }
                }
                if (dup) continue;  // first occurrence counts once per simulation
                scratch.seen.push_back(key);
                AmafStat& st = n.amaf[key];
                st.visits += 1;
                st.value_sum += value;
            }
        }
    }
    const double mag = std::fabs(value);
    if (mag > q_scale) q_scale = mag;

    if (trace) {
        *trace << "sim path";
        for (const int idx : scratch.path) {
            *trace << ' ' << tree.nodes[static_cast<std::size_t>(idx)].key_in;
        }
        *trace << " reward " << value << '\n';
    }
    return value;
}

struct SearchConfig {
    int simulations = 400;
    double k = 1.4142135623730951;
    RewardSystem reward_system = RewardSystem::R2;
    std::uint64_t seed = 0;
    const Expression* selection = nullptr;  // defaults to seeded_uct(k)
    bool normalize_q = false;               // divide Q by the largest |reward| seen
    std::ostream* trace = nullptr;
};

struct RaveConfig {
    int simulations = 400;
    double k = 0.5;
    double b_tilde = 10.0;
    RewardSystem reward_system = RewardSystem::R2;
    std::uint64_t seed = 0;
    std::ostream* trace = nullptr;
};

namespace detail {

// Final move: root child with the best mean value (not visit count);
// ties break uniformly at random. Only expanded children qualify.
template <SearchableGame G>
typename G::Action best_root_action(SearchTree<G>& tree, const typename G::State& state,
                                    const std::vector<typename G::Action>& root_actions,
                                    Rng& rng) {
    const auto& root = tree.nodes[0];
    double best = 0.0;
    std::vector<std::size_t> best_idx;
    for (std::size_t i = 0; i < root_actions.size(); ++i) {
        const auto it = root.children.find(G::action_key(state, root_actions[i]));
        if (it == root.children.end()) continue;
        const auto& child = tree.nodes[static_cast<std::size_t>(it->second)];
        if (child.visits == 0) continue;
        const double q = child.q();
        if (best_idx.empty() || q > best) {
            best = q;
            best_idx.assign(1, i);
        } else if (q == best) {
            best_idx.push_back(i);
        }
    }
    if (best_idx.empty()) throw std::logic_error("search: no expanded root children");
    const std::size_t pick =
        best_idx.size() == 1
            ? best_idx[0]
            : best_idx[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(best_idx.size())))];
    return root_actions[pick];
}

template <SearchableGame G, typename Policy>
typename G::Action policy_search(const typename G::State& state, const Policy& policy,
                                 int simulations, RewardSystem system, std::uint64_t seed,
                                 std::ostream* trace) {
    if (G::is_terminal(state)) throw std::logic_error("search: state is terminal");
    std::vector<typename G::Action> root_actions;
    G::legal_actions_into(state, root_actions);
    if (root_actions.empty()) throw std::logic_error("search: no legal actions");
    if (root_actions.size() == 1) return root_actions[0];

    SearchTree<G> tree(G::to_move(state));
    Rng rng(seed);
    double q_scale = 1.0;
    std::vector<typename G::Action> buf;
    SimulationScratch scratch;
    for (int i = 0; i < simulations; ++i) {
        run_simulation(tree, state, policy, system, rng, q_scale, buf, scratch, trace);
    }
    return best_root_action(tree, state, root_actions, rng);
}

}  // namespace detail

template <SearchableGame G>
typename G::Action mcts_search(const typename G::State& state, const SearchConfig& cfg) {
    Expression default_expr;
    ExpressionPolicy policy;
    if (cfg.selection) {
        policy.expr = cfg.selection;
    } else {
        default_expr = seeded_uct(cfg.k);
        policy.expr = &default_expr;
    }
    policy.normalize_q = cfg.normalize_q;
    return detail::policy_search<G>(state, policy, cfg.simulations, cfg.reward_system, cfg.seed,
                                    cfg.trace);
}

template <SearchableGame G>
typename G::Action rave_search(const typename G::State& state, const RaveConfig& cfg) {
    RavePolicy policy;
    policy.k = cfg.k;
    policy.b_tilde = cfg.b_tilde;
    return detail::policy_search<G>(state, policy, cfg.simulations, cfg.reward_system, cfg.seed,
                                    cfg.trace);
}

}  // namespace carcas
