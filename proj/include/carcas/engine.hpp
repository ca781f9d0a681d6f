#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "carcas/game.hpp"
#include "carcas/rng.hpp"
#include "carcas/tileset.hpp"

namespace carcas {

// Scoring constants for the base game, kept in one table so the engine
// and the hand-scored test fixtures share a single source.
struct ScoreRules {
    int city_per_tile = 2;
    int city_per_pennant = 2;
    int road_per_tile = 1;
    int monastery_complete = 9;
    int farm_per_completed_city = 3;
    int end_city_per_tile = 1;
    int end_city_per_pennant = 1;
    int end_road_per_tile = 1;
    int end_monastery_base = 1;  // plus one per placed neighbour
};
inline constexpr ScoreRules kScoreRules{};

struct Coord {
    std::int16_t x = 0;
    std::int16_t y = 0;
    friend bool operator==(Coord a, Coord b) { return a.x == b.x && a.y == b.y; }
    friend bool operator!=(Coord a, Coord b) { return !(a == b); }
    friend bool operator<(Coord a, Coord b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    }
};

struct Placement {
    Coord pos;
    std::uint8_t rot = 0;
    friend bool operator==(Placement a, Placement b) { return a.pos == b.pos && a.rot == b.rot; }
};

// A full move: tile placement plus an optional meeple on one feature
// slot of the just-placed tile (-1 = no meeple).
struct Action {
    Coord pos;
    std::uint8_t rot = 0;
    std::int8_t meeple_slot = -1;
    friend bool operator==(const Action& a, const Action& b) {
        return a.pos == b.pos && a.rot == b.rot && a.meeple_slot == b.meeple_slot;
    }
};

struct PlacedTile {
    std::uint8_t kind = 0;
    std::uint8_t rot = 0;
    std::int16_t node_base = 0;  // feature slot i lives at arena node node_base + i
};

struct BoardEntry {
    Coord pos;
    PlacedTile tile;
};

struct SegNode {
    std::int16_t parent = 0;
    std::int16_t size = 1;  // union by size
    FeatureKind kind = FeatureKind::Field;
    bool scored = false;
    bool complete = false;
    std::uint8_t pennants = 0;
    std::array<std::uint8_t, 2> meeples{0, 0};
    // City/Road: sides not yet faced by a neighbour. Monastery: placed
    // neighbour count (complete at 8). Fields do not use it.
    std::int16_t open_ends = 0;
    std::int16_t members_head = -1, members_tail = -1;
    std::int32_t cityadj_head = -1, cityadj_tail = -1;
};

struct CityAdjEdge {
    std::int16_t city_node = -1;
    std::int32_t next = -1;
};

struct Arena {
    std::vector<SegNode> nodes;
    std::vector<std::int16_t> member_next;  // intrusive member list per segment
    std::vector<Coord> node_coord;
    std::vector<CityAdjEdge> cityadj;

    int find(int i) const {
        while (nodes[static_cast<std::size_t>(i)].parent != i) {
            i = nodes[static_cast<std::size_t>(i)].parent;
        }
        return i;
    }
};

struct GameState {
    const TileSet* tiles = &standard_tileset();
    std::vector<BoardEntry> board;  // sorted by coordinate
    Arena arena;
    std::vector<std::uint8_t> deck;  // next draw at the back
    std::vector<std::uint8_t> discarded;
    std::int8_t drawn = -1;  // kind index, -1 when no tile is held
    std::array<std::uint8_t, 2> meeples_left{7, 7};
    std::array<int, 2> scores{0, 0};
    PlayerId to_move = PlayerId::P1;
    int turn = 0;
    int initial_tiles = 0;
};

inline bool is_terminal(const GameState& s) { return s.deck.empty() && s.drawn < 0; }
inline PlayerId current_player(const GameState& s) { return s.to_move; }

inline const BoardEntry* board_at(const GameState& s, Coord c) {
    auto it = std::lower_bound(s.board.begin(), s.board.end(), c,
                               [](const BoardEntry& e, Coord k) { return e.pos < k; });
    if (it != s.board.end() && it->pos == c) return &*it;
    return nullptr;
}

namespace detail {

inline Coord neighbour(Coord c, int dir) {
    return Coord{static_cast<std::int16_t>(c.x + dir_dx(dir)),
                 static_cast<std::int16_t>(c.y + dir_dy(dir))};
}

inline const TileKind& kind_of(const GameState& s, const PlacedTile& t) {
    return s.tiles->kinds[t.kind];
}

inline bool placement_fits(const GameState& s, const TileKind& k, Coord pos, int rot) {
    if (board_at(s, pos) != nullptr) return false;
    bool touches = false;
    for (int d = 0; d < 4; ++d) {
        const BoardEntry* nb = board_at(s, neighbour(pos, d));
        if (!nb) continue;
        touches = true;
        const TileKind& nk = kind_of(s, nb->tile);
        if (edge_at(k, rot, d) != edge_at(nk, nb->tile.rot, opposite_dir(d))) return false;
    }
    return touches;
}

// Node id of the feature owning world side `dir` / world half `half` of
// a placed tile, or -1.
inline int side_node(const GameState& s, const BoardEntry& e, int dir) {
    const int slot = side_feature_at(kind_of(s, e.tile), e.tile.rot, dir);
    return slot < 0 ? -1 : e.tile.node_base + slot;
}
inline int half_node(const GameState& s, const BoardEntry& e, int half) {
    const int slot = half_feature_at(kind_of(s, e.tile), e.tile.rot, half);
    return slot < 0 ? -1 : e.tile.node_base + slot;
}

// True when a meeple may go on feature `slot` of `kind` placed at
// (pos, rot): no segment it merges into may hold an opponent meeple.
inline bool slot_claimable(const GameState& s, const TileKind& kind, Coord pos, int rot,
                           int slot, PlayerId player) {
    const FeatureTemplate& f = kind.features[static_cast<std::size_t>(slot)];
    if (f.kind == FeatureKind::Monastery) return true;
    const int opp = player_index(opponent(player));
    if (f.kind == FeatureKind::Field) {
        for (int p = 0; p < 8; ++p) {
            if (!((f.halves >> p) & 1)) continue;
            const int wp = (p + 2 * rot) & 7;
            const BoardEntry* nb = board_at(s, neighbour(pos, half_side(wp)));
            if (!nb) continue;
            const int other = half_node(s, *nb, mirror_half(wp));
            if (other >= 0 &&
                s.arena.nodes[static_cast<std::size_t>(s.arena.find(other))].meeples[opp] > 0) {
                return false;
            }
        }
        return true;
    }
    for (int d = 0; d < 4; ++d) {
        if (!((f.sides >> d) & 1)) continue;
        const int wd = (d + rot) & 3;
        const BoardEntry* nb = board_at(s, neighbour(pos, wd));
        if (!nb) continue;
        const int other = side_node(s, *nb, opposite_dir(wd));
        if (other >= 0 &&
            s.arena.nodes[static_cast<std::size_t>(s.arena.find(other))].meeples[opp] > 0) {
            return false;
        }
    }
    return true;
}

inline int count_distinct_tiles(const Arena& a, int root) {
    std::vector<Coord> coords;
    for (int m = a.nodes[static_cast<std::size_t>(root)].members_head; m >= 0;
         m = a.member_next[static_cast<std::size_t>(m)]) {
        coords.push_back(a.node_coord[static_cast<std::size_t>(m)]);
    }
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    return static_cast<int>(coords.size());
}

// Awards `points` to the player(s) holding the meeple majority on the
// segment. Ties pay every tied leader in full.
inline void award_majority(GameState& s, const SegNode& seg, int points) {
    const int m1 = seg.meeples[0], m2 = seg.meeples[1];
    if (m1 == 0 && m2 == 0) return;
    if (m1 >= m2) s.scores[0] += points;
    if (m2 >= m1) s.scores[1] += points;
}

inline void score_completed(GameState& s, int root) {
    SegNode& seg = s.arena.nodes[static_cast<std::size_t>(root)];
    int points = 0;
    switch (seg.kind) {
        case FeatureKind::City:
            points = kScoreRules.city_per_tile * count_distinct_tiles(s.arena, root) +
                     kScoreRules.city_per_pennant * seg.pennants;
            break;
        case FeatureKind::Road:
            points = kScoreRules.road_per_tile * count_distinct_tiles(s.arena, root);
            break;
        case FeatureKind::Monastery:
            points = kScoreRules.monastery_complete;
            break;
        case FeatureKind::Field:
            return;  // fields only score at game end
    }
    award_majority(s, seg, points);
    for (int p = 0; p < 2; ++p) {
        s.meeples_left[p] = static_cast<std::uint8_t>(s.meeples_left[p] + seg.meeples[p]);
        seg.meeples[p] = 0;
    }
    seg.scored = true;
    seg.complete = true;
}

inline int union_segments(Arena& a, int x, int y) {
    int rx = a.find(x), ry = a.find(y);
    if (rx == ry) return rx;
    if (a.nodes[static_cast<std::size_t>(rx)].size < a.nodes[static_cast<std::size_t>(ry)].size) {
        std::swap(rx, ry);
    }
    SegNode& big = a.nodes[static_cast<std::size_t>(rx)];
    SegNode& small = a.nodes[static_cast<std::size_t>(ry)];
    small.parent = static_cast<std::int16_t>(rx);
    big.size = static_cast<std::int16_t>(big.size + small.size);
    big.pennants = static_cast<std::uint8_t>(big.pennants + small.pennants);
    big.meeples[0] = static_cast<std::uint8_t>(big.meeples[0] + small.meeples[0]);
    big.meeples[1] = static_cast<std::uint8_t>(big.meeples[1] + small.meeples[1]);
    big.open_ends = static_cast<std::int16_t>(big.open_ends + small.open_ends);
    a.member_next[static_cast<std::size_t>(big.members_tail)] = small.members_head;
    big.members_tail = small.members_tail;
    if (small.cityadj_head >= 0) {
        if (big.cityadj_head < 0) {
            big.cityadj_head = small.cityadj_head;
            big.cityadj_tail = small.cityadj_tail;
        } else {
            a.cityadj[static_cast<std::size_t>(big.cityadj_tail)].next = small.cityadj_head;
            big.cityadj_tail = small.cityadj_tail;
        }
    }
    return rx;
}

// Pops deck tiles until one has a legal placement; tiles with none are
// discarded. Leaves drawn = -1 when the deck runs out.
inline void draw_next(GameState& s);

}  // namespace detail

inline std::vector<Placement> legal_placements(const GameState& s, int kind_index) {
    const TileKind& k = s.tiles->kinds[static_cast<std::size_t>(kind_index)];
    std::vector<Coord> frontier;
    frontier.reserve(s.board.size() * 4);
    for (const BoardEntry& e : s.board) {
        for (int d = 0; d < 4; ++d) {
            const Coord c = detail::neighbour(e.pos, d);
            if (!board_at(s, c)) frontier.push_back(c);
        }
    }
    std::sort(frontier.begin(), frontier.end());
    frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
    std::vector<Placement> out;
    for (Coord c : frontier) {
        for (int rot = 0; rot < 4; ++rot) {
            if (detail::placement_fits(s, k, c, rot)) {
                out.push_back(Placement{c, static_cast<std::uint8_t>(rot)});
            }
        }
    }
    return out;
}

inline void legal_actions_into(const GameState& s, std::vector<Action>& out) {
    out.clear();
    if (s.drawn < 0) throw std::logic_error("legal_actions: no drawn tile");
    const TileKind& k = s.tiles->kinds[static_cast<std::size_t>(s.drawn)];
    const bool can_meeple = s.meeples_left[player_index(s.to_move)] > 0;
    for (const Placement& p : legal_placements(s, s.drawn)) {
        out.push_back(Action{p.pos, p.rot, -1});
        if (!can_meeple) continue;
        for (std::size_t slot = 0; slot < k.features.size(); ++slot) {
            if (detail::slot_claimable(s, k, p.pos, p.rot, static_cast<int>(slot), s.to_move)) {
                out.push_back(Action{p.pos, p.rot, static_cast<std::int8_t>(slot)});
            }
        }
    }
}

inline std::vector<Action> legal_actions(const GameState& s) {
    std::vector<Action> out;
    legal_actions_into(s, out);
    return out;
}

// Applies a move. With auto_draw (the normal game rule) the next tile
// is popped for the opponent before returning; the star searches pass
// false and enumerate the possible draws as explicit chance outcomes.
inline void apply_in_place(GameState& s, const Action& a, bool auto_draw = true) {
    if (s.drawn < 0) throw std::logic_error("apply: no drawn tile");
    const int kind_index = s.drawn;
    const TileKind& k = s.tiles->kinds[static_cast<std::size_t>(kind_index)];
    if (!detail::placement_fits(s, k, a.pos, a.rot)) {
        throw std::invalid_argument("apply: illegal placement at (" + std::to_string(a.pos.x) +
                                    "," + std::to_string(a.pos.y) + ") rot " +
                                    std::to_string(int(a.rot) * 90));
    }
    const PlayerId mover = s.to_move;
    if (a.meeple_slot >= 0) {
        if (a.meeple_slot >= static_cast<int>(k.features.size())) {
            throw std::invalid_argument("apply: meeple slot out of range");
        }
        if (s.meeples_left[player_index(mover)] == 0) {
            throw std::invalid_argument("apply: no meeples left");
        }
        if (!detail::slot_claimable(s, k, a.pos, a.rot, a.meeple_slot, mover)) {
            throw std::invalid_argument("apply: feature already holds an opponent meeple");
        }
    }

    // Create arena nodes for the new tile's features.
    Arena& ar = s.arena;
    const int base = static_cast<int>(ar.nodes.size());
    for (std::size_t i = 0; i < k.features.size(); ++i) {
        const FeatureTemplate& f = k.features[i];
        SegNode n;
        const int self = base + static_cast<int>(i);
        n.parent = static_cast<std::int16_t>(self);
        n.kind = f.kind;
        n.members_head = n.members_tail = static_cast<std::int16_t>(self);
        if (f.kind == FeatureKind::City || f.kind == FeatureKind::Road) {
            n.open_ends = static_cast<std::int16_t>(f.side_count());
            if (f.kind == FeatureKind::City && k.pennant) n.pennants = 1;
        } else if (f.kind == FeatureKind::Monastery) {
            int placed = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const Coord c{static_cast<std::int16_t>(a.pos.x + dx),
                                  static_cast<std::int16_t>(a.pos.y + dy)};
                    if (board_at(s, c)) ++placed;
                }
            }
            n.open_ends = static_cast<std::int16_t>(placed);
        }
        ar.nodes.push_back(n);
        ar.member_next.push_back(-1);
        ar.node_coord.push_back(a.pos);
    }
    for (std::size_t i = 0; i < k.features.size(); ++i) {
        const FeatureTemplate& f = k.features[i];
        if (f.kind != FeatureKind::Field) continue;
        SegNode& n = ar.nodes[static_cast<std::size_t>(base + static_cast<int>(i))];
        for (std::uint8_t c : f.adjacent_cities) {
            ar.cityadj.push_back(CityAdjEdge{static_cast<std::int16_t>(base + c), n.cityadj_head});
            n.cityadj_head = static_cast<std::int32_t>(ar.cityadj.size() - 1);
            if (n.cityadj_tail < 0) n.cityadj_tail = n.cityadj_head;
        }
    }

    // Insert into the board (kept sorted by coordinate).
    {
        auto it = std::lower_bound(s.board.begin(), s.board.end(), a.pos,
                                   [](const BoardEntry& e, Coord c) { return e.pos < c; });
        s.board.insert(it, BoardEntry{a.pos, PlacedTile{static_cast<std::uint8_t>(kind_index),
                                                        a.rot, static_cast<std::int16_t>(base)}});
    }
    const BoardEntry& placed = *board_at(s, a.pos);

    // Merge with neighbours across each occupied side.
    for (int d = 0; d < 4; ++d) {
        const BoardEntry* nb = board_at(s, detail::neighbour(a.pos, d));
        if (!nb) continue;
        const EdgeKind ek = edge_at(k, a.rot, d);
        if (ek == EdgeKind::City || ek == EdgeKind::Road) {
            const int mine = detail::side_node(s, placed, d);
            const int theirs = detail::side_node(s, *nb, opposite_dir(d));
            const int rm = ar.find(mine), rt = ar.find(theirs);
            if (rm == rt) {
                ar.nodes[static_cast<std::size_t>(rm)].open_ends =
                    static_cast<std::int16_t>(ar.nodes[static_cast<std::size_t>(rm)].open_ends - 2);
            } else {
                const int r = detail::union_segments(ar, rm, rt);
                ar.nodes[static_cast<std::size_t>(r)].open_ends =
                    static_cast<std::int16_t>(ar.nodes[static_cast<std::size_t>(r)].open_ends - 2);
            }
        }
        if (ek == EdgeKind::Road || ek == EdgeKind::Field) {
            for (int h = 0; h < 2; ++h) {
                const int wp = 2 * d + h;
                const int mine = detail::half_node(s, placed, wp);
                const int theirs = detail::half_node(s, *nb, mirror_half(wp));
                if (mine >= 0 && theirs >= 0) detail::union_segments(ar, mine, theirs);
            }
        }
    }

    // Monastery neighbour counts: the new tile feeds every adjacent
    // monastery, and its own monastery may already be surrounded.
    std::vector<int> completed_monasteries;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const Coord c{static_cast<std::int16_t>(a.pos.x + dx),
                          static_cast<std::int16_t>(a.pos.y + dy)};
            const BoardEntry* nb = board_at(s, c);
            if (!nb) continue;
            const TileKind& nk = detail::kind_of(s, nb->tile);
            if (nk.monastery_slot < 0) continue;
            SegNode& m = ar.nodes[static_cast<std::size_t>(nb->tile.node_base + nk.monastery_slot)];
            m.open_ends = static_cast<std::int16_t>(m.open_ends + 1);
            if (m.open_ends == 8) completed_monasteries.push_back(nb->tile.node_base + nk.monastery_slot);
        }
    }
    if (k.monastery_slot >= 0 &&
        ar.nodes[static_cast<std::size_t>(base + k.monastery_slot)].open_ends == 8) {
        completed_monasteries.push_back(base + k.monastery_slot);
    }

    if (a.meeple_slot >= 0) {
        const int root = ar.find(base + a.meeple_slot);
        SegNode& seg = ar.nodes[static_cast<std::size_t>(root)];
        seg.meeples[player_index(mover)] =
            static_cast<std::uint8_t>(seg.meeples[player_index(mover)] + 1);
        s.meeples_left[player_index(mover)] =
            static_cast<std::uint8_t>(s.meeples_left[player_index(mover)] - 1);
    }

    // Score everything completed by this placement.
    for (std::size_t i = 0; i < k.features.size(); ++i) {
        const FeatureKind fk = k.features[i].kind;
        if (fk != FeatureKind::City && fk != FeatureKind::Road) continue;
        const int root = ar.find(base + static_cast<int>(i));
        SegNode& seg = ar.nodes[static_cast<std::size_t>(root)];
        if (seg.open_ends == 0 && !seg.scored) detail::score_completed(s, root);
    }
    for (int m : completed_monasteries) {
        SegNode& seg = ar.nodes[static_cast<std::size_t>(m)];
        seg.complete = true;
        if (!seg.scored) detail::score_completed(s, m);
    }

    s.turn += 1;
    s.to_move = opponent(mover);
    s.drawn = -1;
    detail::draw_next(s);
}

namespace detail {
inline void draw_next(GameState& s) {
    while (!s.deck.empty()) {
        const std::uint8_t kind = s.deck.back();
        s.deck.pop_back();
        if (!legal_placements(s, kind).empty()) {
            s.drawn = static_cast<std::int8_t>(kind);
            return;
        }
        s.discarded.push_back(kind);
    }
    s.drawn = -1;
}
}  // namespace detail

inline GameState apply(const GameState& s, const Action& a) {
    GameState next = s;
    apply_in_place(next, a);
    return next;
}

// Pops the next tile for the player to move. Used for the initial draw
// after new_game; apply() draws for subsequent turns itself.
inline GameState draw_tile(const GameState& s) {
    if (s.drawn >= 0) throw std::logic_error("draw_tile: a tile is already held");
    if (s.deck.empty()) throw std::logic_error("draw_tile: deck is empty");
    GameState next = s;
    detail::draw_next(next);
    return next;
}

// Starts a game on `set` with the given deck order (back of the vector
// is drawn first). Used by tests, replay, and new_game.
inline GameState new_game_with_deck(const TileSet& set, std::vector<std::uint8_t> deck) {
    GameState s;
    s.tiles = &set;
    s.deck = std::move(deck);
    s.initial_tiles = static_cast<int>(s.deck.size()) + 1;
    const int start = set.start_kind;
    const TileKind& k = set.kinds[static_cast<std::size_t>(start)];
    // Seed the board with the start tile by hand (no adjacency yet).
    const int base = 0;
    for (std::size_t i = 0; i < k.features.size(); ++i) {
        const FeatureTemplate& f = k.features[i];
        SegNode n;
        const int self = base + static_cast<int>(i);
        n.parent = static_cast<std::int16_t>(self);
        n.kind = f.kind;
        n.members_head = n.members_tail = static_cast<std::int16_t>(self);
        if (f.kind == FeatureKind::City || f.kind == FeatureKind::Road) {
            n.open_ends = static_cast<std::int16_t>(f.side_count());
            if (f.kind == FeatureKind::City && k.pennant) n.pennants = 1;
        }
        s.arena.nodes.push_back(n);
        s.arena.member_next.push_back(-1);
        s.arena.node_coord.push_back(Coord{0, 0});
    }
    for (std::size_t i = 0; i < k.features.size(); ++i) {
        const FeatureTemplate& f = k.features[i];
        if (f.kind != FeatureKind::Field) continue;
        SegNode& n = s.arena.nodes[i];
        for (std::uint8_t c : f.adjacent_cities) {
            s.arena.cityadj.push_back(CityAdjEdge{static_cast<std::int16_t>(base + c), n.cityadj_head});
            n.cityadj_head = static_cast<std::int32_t>(s.arena.cityadj.size() - 1);
            if (n.cityadj_tail < 0) n.cityadj_tail = n.cityadj_head;
        }
    }
    s.board.push_back(BoardEntry{Coord{0, 0}, PlacedTile{static_cast<std::uint8_t>(start), 0, 0}});
    return s;
}

// Fresh standard game: start tile at the origin, the other 71 tiles
// shuffled by `seed`, P1 to move, no tile drawn yet.
inline GameState new_game(std::uint64_t seed) {
    const TileSet& set = standard_tileset();
    std::vector<std::uint8_t> deck;
    for (std::size_t i = 0; i < set.kinds.size(); ++i) {
        int n = set.kinds[i].multiplicity;
        if (static_cast<int>(i) == set.start_kind) --n;
        for (int j = 0; j < n; ++j) deck.push_back(static_cast<std::uint8_t>(i));
    }
    Rng rng(seed);
    rng.shuffle(deck);
    return new_game_with_deck(set, std::move(deck));
}

// Re-shuffles the unseen portion of the deck; the held tile stays. Used
// by the searches to re-sample future draws on each simulation descent.
inline void reshuffle_deck(GameState& s, Rng& rng) { rng.shuffle(s.deck); }

// Reserves worst-case capacities so that a simulation can run to the
// end of the game without reallocating.
inline void reserve_for_play(GameState& s) {
    const std::size_t tiles = static_cast<std::size_t>(s.initial_tiles);
    s.board.reserve(tiles);
    const std::size_t nodes = tiles * 8;
    s.arena.nodes.reserve(nodes);
    s.arena.member_next.reserve(nodes);
    s.arena.node_coord.reserve(nodes);
    s.arena.cityadj.reserve(tiles * 3);
    s.discarded.reserve(8);
}

// End-of-game scoring: farms, then incomplete features. Pure; the
// returned outcome carries the running scores plus all end bonuses.
inline GameOutcome final_scoring(const GameState& s) {
    if (!is_terminal(s)) throw std::logic_error("final_scoring: game is not over");
    GameState tally = s;  // scratch copy so award_majority can reuse scores
    const Arena& ar = s.arena;
    for (std::size_t i = 0; i < ar.nodes.size(); ++i) {
        if (ar.find(static_cast<int>(i)) != static_cast<int>(i)) continue;
        const SegNode& seg = ar.nodes[i];
        if (seg.meeples[0] == 0 && seg.meeples[1] == 0) continue;
        int points = 0;
        switch (seg.kind) {
            case FeatureKind::City:
                if (seg.complete) continue;
                points = kScoreRules.end_city_per_tile * detail::count_distinct_tiles(ar, static_cast<int>(i)) +
                         kScoreRules.end_city_per_pennant * seg.pennants;
                break;
            case FeatureKind::Road:
                if (seg.complete) continue;
                points = kScoreRules.end_road_per_tile * detail::count_distinct_tiles(ar, static_cast<int>(i));
                break;
            case FeatureKind::Monastery:
                if (seg.complete) continue;
                points = kScoreRules.end_monastery_base + seg.open_ends;
                break;
            case FeatureKind::Field: {
                std::vector<int> cities;
                for (std::int32_t e = seg.cityadj_head; e >= 0;
                     e = ar.cityadj[static_cast<std::size_t>(e)].next) {
                    const int root = ar.find(ar.cityadj[static_cast<std::size_t>(e)].city_node);
                    if (ar.nodes[static_cast<std::size_t>(root)].complete) cities.push_back(root);
                }
                std::sort(cities.begin(), cities.end());
                cities.erase(std::unique(cities.begin(), cities.end()), cities.end());
                points = kScoreRules.farm_per_completed_city * static_cast<int>(cities.size());
                break;
            }
        }
        detail::award_majority(tally, seg, points);
    }
    return GameOutcome{tally.scores[0], tally.scores[1], true};
}

// Canonical segment partition: each segment as a sorted list of
// (coordinate, feature-slot) members, segments sorted among themselves.
inline std::vector<std::vector<std::pair<Coord, int>>> canonical_partition(const GameState& s) {
    const Arena& ar = s.arena;
    std::vector<std::vector<std::pair<Coord, int>>> groups;
    for (std::size_t i = 0; i < ar.nodes.size(); ++i) {
        if (ar.find(static_cast<int>(i)) != static_cast<int>(i)) continue;
        std::vector<std::pair<Coord, int>> members;
        for (int m = ar.nodes[i].members_head; m >= 0;
             m = ar.member_next[static_cast<std::size_t>(m)]) {
            const Coord c = ar.node_coord[static_cast<std::size_t>(m)];
            const BoardEntry* e = board_at(s, c);
            members.emplace_back(c, m - e->tile.node_base);
        }
        std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first < b.first : a.second < b.second;
        });
        groups.push_back(std::move(members));
    }
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
        return std::lexicographical_compare(
            a.begin(), a.end(), b.begin(), b.end(), [](const auto& x, const auto& y) {
                return x.first != y.first ? x.first < y.first : x.second < y.second;
            });
    });
    return groups;
}

struct AuditReport {
    bool ok = true;
    std::string message;
};

// Full-state invariant audit: edge matching across every adjacent pair,
// meeple conservation, tile census, and an independent flood-fill
// reconstruction of the segment partition, open ends, pennants and
// completeness, compared against the incremental union-find data.
inline AuditReport audit_state(const GameState& s) {
    auto fail = [](std::string m) { return AuditReport{false, std::move(m)}; };
    for (const BoardEntry& e : s.board) {
        const TileKind& k = detail::kind_of(s, e.tile);
        for (int d = 0; d < 4; ++d) {
            const BoardEntry* nb = board_at(s, detail::neighbour(e.pos, d));
            if (!nb) continue;
            const TileKind& nk = detail::kind_of(s, nb->tile);
            if (edge_at(k, e.tile.rot, d) != edge_at(nk, nb->tile.rot, opposite_dir(d))) {
                return fail("edge mismatch at (" + std::to_string(e.pos.x) + "," +
                            std::to_string(e.pos.y) + ") dir " + std::to_string(d));
            }
        }
    }
    {
        std::array<int, 2> on_board{0, 0};
        for (std::size_t i = 0; i < s.arena.nodes.size(); ++i) {
            if (s.arena.find(static_cast<int>(i)) != static_cast<int>(i)) continue;
            on_board[0] += s.arena.nodes[i].meeples[0];
            on_board[1] += s.arena.nodes[i].meeples[1];
        }
        for (int p = 0; p < 2; ++p) {
            if (on_board[p] + s.meeples_left[p] != 7) {
                return fail("meeple conservation violated for player " + std::to_string(p + 1));
            }
        }
    }
    {
        const int census = static_cast<int>(s.board.size() + s.deck.size() + s.discarded.size()) +
                           (s.drawn >= 0 ? 1 : 0);
        if (census != s.initial_tiles) return fail("tile census mismatch");
    }

    // Independent reconstruction: union features by scanning all
    // adjacencies at once instead of incrementally.
    Arena fresh;
    std::vector<int> bases(s.board.size());
    for (std::size_t b = 0; b < s.board.size(); ++b) {
        const BoardEntry& e = s.board[b];
        const TileKind& k = detail::kind_of(s, e.tile);
        bases[b] = static_cast<int>(fresh.nodes.size());
        for (std::size_t i = 0; i < k.features.size(); ++i) {
            SegNode n;
            const int self = bases[b] + static_cast<int>(i);
            n.parent = static_cast<std::int16_t>(self);
            n.kind = k.features[i].kind;
            n.members_head = n.members_tail = static_cast<std::int16_t>(self);
            fresh.nodes.push_back(n);
            fresh.member_next.push_back(-1);
            fresh.node_coord.push_back(e.pos);
        }
    }
    auto fresh_node = [&](const BoardEntry& e, int slot) {
        const std::size_t b = static_cast<std::size_t>(&e - s.board.data());
        return bases[b] + slot;
    };
    for (const BoardEntry& e : s.board) {
        const TileKind& k = detail::kind_of(s, e.tile);
        for (int d = 0; d < 4; ++d) {
            const BoardEntry* nb = board_at(s, detail::neighbour(e.pos, d));
            if (!nb) continue;
            const EdgeKind ek = edge_at(k, e.tile.rot, d);
            if (ek == EdgeKind::City || ek == EdgeKind::Road) {
                const int a = side_feature_at(k, e.tile.rot, d);
                const int b2 = side_feature_at(detail::kind_of(s, nb->tile), nb->tile.rot,
                                               opposite_dir(d));
                detail::union_segments(fresh, fresh_node(e, a), fresh_node(*nb, b2));
            }
            if (ek == EdgeKind::Road || ek == EdgeKind::Field) {
                for (int h = 0; h < 2; ++h) {
                    const int wp = 2 * d + h;
                    const int a = half_feature_at(k, e.tile.rot, wp);
                    const int b2 = half_feature_at(detail::kind_of(s, nb->tile), nb->tile.rot,
                                                   mirror_half(wp));
                    if (a >= 0 && b2 >= 0) {
                        detail::union_segments(fresh, fresh_node(e, a), fresh_node(*nb, b2));
                    }
                }
            }
        }
    }
    // Compare partitions via canonical member sets keyed by (coord, slot).
    auto canon = [](const Arena& ar, const std::vector<BoardEntry>& board,
                    const std::vector<int>* fresh_bases) {
        std::vector<std::vector<std::pair<Coord, int>>> groups;
        for (std::size_t i = 0; i < ar.nodes.size(); ++i) {
            if (ar.find(static_cast<int>(i)) != static_cast<int>(i)) continue;
            std::vector<std::pair<Coord, int>> members;
            for (int m = ar.nodes[i].members_head; m >= 0;
                 m = ar.member_next[static_cast<std::size_t>(m)]) {
                const Coord c = ar.node_coord[static_cast<std::size_t>(m)];
                int slot = -1;
                for (std::size_t b = 0; b < board.size(); ++b) {
                    if (board[b].pos == c) {
                        slot = m - (fresh_bases ? (*fresh_bases)[b] : board[b].tile.node_base);
                        break;
                    }
                }
                members.emplace_back(c, slot);
            }
            std::sort(members.begin(), members.end());
            groups.push_back(std::move(members));
        }
        std::sort(groups.begin(), groups.end());
        return groups;
    };
    if (canon(s.arena, s.board, nullptr) != canon(fresh, s.board, &bases)) {
        return fail("segment partition differs from flood-fill reconstruction");
    }
    // Validate open ends and completeness per segment.
    for (std::size_t i = 0; i < s.arena.nodes.size(); ++i) {
        if (s.arena.find(static_cast<int>(i)) != static_cast<int>(i)) continue;
        const SegNode& seg = s.arena.nodes[i];
        if (seg.kind == FeatureKind::City || seg.kind == FeatureKind::Road) {
            int open = 0;
            for (int m = seg.members_head; m >= 0;
                 m = s.arena.member_next[static_cast<std::size_t>(m)]) {
                const Coord c = s.arena.node_coord[static_cast<std::size_t>(m)];
                const BoardEntry* e = board_at(s, c);
                const TileKind& k = detail::kind_of(s, e->tile);
                const int slot = m - e->tile.node_base;
                const FeatureTemplate& f = k.features[static_cast<std::size_t>(slot)];
                for (int d = 0; d < 4; ++d) {
                    if (!((f.sides >> d) & 1)) continue;
                    const int wd = (d + e->tile.rot) & 3;
                    if (!board_at(s, detail::neighbour(c, wd))) ++open;
                }
            }
            if (open != seg.open_ends) return fail("open-end count mismatch");
            if (seg.complete != (open == 0)) return fail("completeness flag mismatch");
        } else if (seg.kind == FeatureKind::Monastery) {
            const Coord c = s.arena.node_coord[i];
            int placed = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (board_at(s, Coord{static_cast<std::int16_t>(c.x + dx),
                                          static_cast<std::int16_t>(c.y + dy)})) {
                        ++placed;
                    }
                }
            }
            if (placed != seg.open_ends) return fail("monastery neighbour count mismatch");
            if (seg.complete != (placed == 8)) return fail("monastery completeness mismatch");
        }
    }
    if (s.scores[0] < 0 || s.scores[1] < 0) return fail("negative score");
    return AuditReport{};
}

}  // namespace carcas
