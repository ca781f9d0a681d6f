#pragma once

#include <array>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace carcas {

// Sides are indexed N=0, E=1, S=2, W=3. A rotation is a number of
// quarter turns clockwise; a rotated tile shows its local side
// (world - rot) & 3 at world direction `world`.
//
// Field connectivity works on half-edge ports, indexed clockwise:
//   0=Nw 1=Ne 2=En 3=Es 4=Se 5=Sw 6=Ws 7=Wn
// Two facing tiles pair port p with port (p ^ 5) on the neighbour, and
// side d with side (d ^ 2).

enum class EdgeKind : std::uint8_t { City, Road, Field };
enum class FeatureKind : std::uint8_t { City, Road, Field, Monastery };

inline constexpr int kDirN = 0;
inline constexpr int kDirE = 1;
inline constexpr int kDirS = 2;
inline constexpr int kDirW = 3;

inline constexpr int dir_dx(int d) { return d == kDirE ? 1 : d == kDirW ? -1 : 0; }
inline constexpr int dir_dy(int d) { return d == kDirN ? 1 : d == kDirS ? -1 : 0; }
inline constexpr int opposite_dir(int d) { return d ^ 2; }
inline constexpr int mirror_half(int p) { return p ^ 5; }
inline constexpr int half_side(int p) { return p >> 1; }

struct FeatureTemplate {
    FeatureKind kind = FeatureKind::Field;
    std::uint8_t sides = 0;   // city/road: bitmask over sides 0..3
    std::uint8_t halves = 0;  // field: bitmask over half ports 0..7
    std::vector<std::uint8_t> adjacent_cities;  // field: city slots it borders

    int side_count() const {
        int n = 0;
        for (int d = 0; d < 4; ++d) n += (sides >> d) & 1;
        return n;
    }
};

struct TileKind {
    std::string id;
    int multiplicity = 0;
    std::array<EdgeKind, 4> edges{};
    bool pennant = false;
    std::vector<FeatureTemplate> features;  // declaration order = meeple slot index

    // Derived lookups, filled by finalize().
    std::array<std::int8_t, 4> side_feature{};  // slot owning each city/road side
    std::array<std::int8_t, 8> half_feature{};  // slot owning each field half port
    std::int8_t monastery_slot = -1;

    void finalize() {
        side_feature.fill(-1);
        half_feature.fill(-1);
        monastery_slot = -1;
        for (std::size_t i = 0; i < features.size(); ++i) {
            const FeatureTemplate& f = features[i];
            if (f.kind == FeatureKind::Monastery) {
                monastery_slot = static_cast<std::int8_t>(i);
            } else if (f.kind == FeatureKind::Field) {
                for (int p = 0; p < 8; ++p) {
                    if ((f.halves >> p) & 1) half_feature[p] = static_cast<std::int8_t>(i);
                }
            } else {
                for (int d = 0; d < 4; ++d) {
                    if ((f.sides >> d) & 1) side_feature[d] = static_cast<std::int8_t>(i);
                }
            }
        }
    }
};

inline EdgeKind edge_at(const TileKind& k, int rot, int world_dir) {
    return k.edges[(world_dir - rot) & 3];
}
inline int side_feature_at(const TileKind& k, int rot, int world_dir) {
    return k.side_feature[(world_dir - rot) & 3];
}
inline int half_feature_at(const TileKind& k, int rot, int world_half) {
    return k.half_feature[(world_half - 2 * rot) & 7];
}

struct TileSet {
    std::vector<TileKind> kinds;
    int start_kind = -1;

    int total_tiles() const {
        int n = 0;
        for (const TileKind& k : kinds) n += k.multiplicity;
        return n;
    }

    int kind_index(std::string_view id) const {
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (kinds[i].id == id) return static_cast<int>(i);
        }
        return -1;
    }
};

namespace detail {

inline const char* kHalfNames[8] = {"Nw", "Ne", "En", "Es", "Se", "Sw", "Ws", "Wn"};
inline const char kSideNames[4] = {'N', 'E', 'S', 'W'};

inline int parse_side(std::string_view tok) {
    if (tok.size() != 1) return -1;
    switch (tok[0]) {
        case 'N': return 0;
        case 'E': return 1;
        case 'S': return 2;
        case 'W': return 3;
        default: return -1;
    }
}

inline int parse_half(std::string_view tok) {
    for (int p = 0; p < 8; ++p) {
        if (tok == kHalfNames[p]) return p;
    }
    return -1;
}

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

}  // namespace detail

// The default tile distribution of the 72-tile base game, in the same
// text format accepted by parse_tileset (shipped as data/tiles_base.txt).
inline const char* standard_tileset_text() {
    return R"(# Carcassonne base-game tile set: 24 kinds, 72 tiles.
#
# tile <id> <multiplicity> <edges NESW, each C|R|F> [pennant]
#   city <side>...
#   road <side>...
#   field <half>... [cities <city-slot>...]
#   monastery
# Sides: N E S W. Halves, clockwise: Nw Ne En Es Se Sw Ws Wn.
# Feature lines are meeple slots 0,1,2,... in order of declaration.
# `start` names the kind placed at the origin before the deck is dealt.

start D

tile A 2 FFRF
  road S
  field Nw Ne En Es Se Sw Ws Wn
  monastery

tile B 4 FFFF
  field Nw Ne En Es Se Sw Ws Wn
  monastery

tile C 1 CCCC pennant
  city N E S W

tile D 4 CRFR
  city N
  road E W
  field En Wn cities 0
  field Es Se Sw Ws

tile E 5 CFFF
  city N
  field En Es Se Sw Ws Wn cities 0

tile F 2 FCFC pennant
  city E W
  field Nw Ne cities 0
  field Se Sw cities 0

tile G 1 CFCF
  city N S
  field En Es cities 0
  field Ws Wn cities 0

tile H 3 FCFC
  city E
  city W
  field Nw Ne Se Sw cities 0 1

tile I 2 FCCF
  city E
  city S
  field Nw Ne Ws Wn cities 0 1

tile J 3 CRRF
  city N
  road E S
  field En Sw Ws Wn cities 0
  field Es Se

tile K 3 CFRR
  city N
  road S W
  field En Es Se Wn cities 0
  field Sw Ws

tile L 3 CRRR
  city N
  road E
  road S
  road W
  field En Wn cities 0
  field Es Se
  field Sw Ws

tile M 2 CFFC pennant
  city N W
  field En Es Se Sw cities 0

tile N 3 CFFC
  city N W
  field En Es Se Sw cities 0

tile O 2 CRRC pennant
  city N W
  road E S
  field En Sw cities 0
  field Es Se

tile P 3 CRRC
  city N W
  road E S
  field En Sw cities 0
  field Es Se

tile Q 1 CCFC pennant
  city N E W
  field Se Sw cities 0

tile R 3 CCFC
  city N E W
  field Se Sw cities 0

tile S 2 CCRC pennant
  city N E W
  road S
  field Se cities 0
  field Sw cities 0

tile T 1 CCRC
  city N E W
  road S
  field Se cities 0
  field Sw cities 0

tile U 8 RFRF
  road N S
  field Ne En Es Se
  field Sw Ws Wn Nw

tile V 9 FFRR
  road S W
  field Nw Ne En Es Se Wn
  field Sw Ws

tile W 4 FRRR
  road E
  road S
  road W
  field Nw Ne En Wn
  field Es Se
  field Sw Ws

tile X 1 RRRR
  road N
  road E
  road S
  road W
  field Ne En
  field Es Se
  field Sw Ws
  field Wn Nw
)";
}

// Structural audit of a tile set. Throws std::runtime_error naming the
// first offending tile. Checks the documented schema invariants: side
// and half-port coverage, pennants only on city tiles, at most one
// monastery, valid field/city adjacency references.
inline void validate_tileset(const TileSet& set) {
    auto fail = [](const std::string& id, const std::string& what) {
        throw std::runtime_error("tileset: tile " + id + ": " + what);
    };
    if (set.kinds.empty()) throw std::runtime_error("tileset: no tiles");
    if (set.start_kind < 0 || set.start_kind >= static_cast<int>(set.kinds.size())) {
        throw std::runtime_error("tileset: missing or invalid start tile");
    }
    for (const TileKind& k : set.kinds) {
        if (k.multiplicity <= 0) fail(k.id, "multiplicity must be positive");
        int monasteries = 0;
        int n_cities = 0;
        std::array<int, 4> side_claims{};
        std::array<int, 8> half_claims{};
        for (const FeatureTemplate& f : k.features) {
            switch (f.kind) {
                case FeatureKind::Monastery:
                    ++monasteries;
                    break;
                case FeatureKind::City:
                case FeatureKind::Road: {
                    if (f.sides == 0) fail(k.id, "city/road feature with no sides");
                    const EdgeKind want =
                        f.kind == FeatureKind::City ? EdgeKind::City : EdgeKind::Road;
                    for (int d = 0; d < 4; ++d) {
                        if (!((f.sides >> d) & 1)) continue;
                        if (k.edges[d] != want) fail(k.id, "feature side does not match edge kind");
                        ++side_claims[d];
                    }
                    if (f.kind == FeatureKind::City) ++n_cities;
                    break;
                }
                case FeatureKind::Field: {
                    if (f.halves == 0) fail(k.id, "field feature with no halves");
                    for (int p = 0; p < 8; ++p) {
                        if (!((f.halves >> p) & 1)) continue;
                        if (k.edges[half_side(p)] == EdgeKind::City) {
                            fail(k.id, "field half on a city side");
                        }
                        ++half_claims[p];
                    }
                    break;
                }
            }
        }
        for (int d = 0; d < 4; ++d) {
            const bool claimed = side_claims[d] > 0;
            const bool needs = k.edges[d] != EdgeKind::Field;
            if (side_claims[d] > 1) fail(k.id, "side claimed by two features");
            if (needs != claimed) fail(k.id, "city/road side coverage mismatch");
        }
        for (int p = 0; p < 8; ++p) {
            const bool needs = k.edges[half_side(p)] != EdgeKind::City;
            if (half_claims[p] != (needs ? 1 : 0)) fail(k.id, "field half coverage mismatch");
        }
        if (monasteries > 1) fail(k.id, "more than one monastery");
        if (k.pennant && n_cities == 0) fail(k.id, "pennant on a tile without a city");
        for (const FeatureTemplate& f : k.features) {
            if (f.kind != FeatureKind::Field) continue;
            for (std::uint8_t c : f.adjacent_cities) {
                if (c >= k.features.size() || k.features[c].kind != FeatureKind::City) {
                    fail(k.id, "field references a non-city slot");
                }
            }
        }
    }
}

inline TileSet parse_tileset(std::string_view text) {
    TileSet set;
    std::string start_id;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    TileKind* current = nullptr;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error("tileset: line " + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::vector<std::string> tok = detail::split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "start") {
            if (tok.size() != 2) fail("start takes one tile id");
            start_id = tok[1];
        } else if (tok[0] == "tile") {
            if (tok.size() < 4) fail("tile needs id, multiplicity, edges");
            TileKind k;
            k.id = tok[1];
            try {
                k.multiplicity = std::stoi(tok[2]);
            } catch (...) {
                fail("bad multiplicity");
            }
            if (tok[3].size() != 4) fail("edges must be four of C|R|F");
            for (int d = 0; d < 4; ++d) {
                switch (tok[3][static_cast<std::size_t>(d)]) {
                    case 'C': k.edges[d] = EdgeKind::City; break;
                    case 'R': k.edges[d] = EdgeKind::Road; break;
                    case 'F': k.edges[d] = EdgeKind::Field; break;
                    default: fail("edges must be four of C|R|F");
                }
            }
            for (std::size_t i = 4; i < tok.size(); ++i) {
                if (tok[i] == "pennant") {
                    k.pennant = true;
                } else {
                    fail("unknown tile attribute: " + tok[i]);
                }
            }
            if (set.kind_index(k.id) >= 0) fail("duplicate tile id " + k.id);
            set.kinds.push_back(std::move(k));
            current = &set.kinds.back();
        } else if (tok[0] == "city" || tok[0] == "road") {
            if (!current) fail("feature line outside a tile block");
            FeatureTemplate f;
            f.kind = tok[0] == "city" ? FeatureKind::City : FeatureKind::Road;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                const int d = detail::parse_side(tok[i]);
                if (d < 0) fail("bad side token: " + tok[i]);
                f.sides |= static_cast<std::uint8_t>(1u << d);
            }
            if (f.sides == 0) fail("city/road needs at least one side");
            current->features.push_back(std::move(f));
        } else if (tok[0] == "field") {
            if (!current) fail("feature line outside a tile block");
            FeatureTemplate f;
            f.kind = FeatureKind::Field;
            std::size_t i = 1;
            for (; i < tok.size() && tok[i] != "cities"; ++i) {
                const int p = detail::parse_half(tok[i]);
                if (p < 0) fail("bad half token: " + tok[i]);
                f.halves |= static_cast<std::uint8_t>(1u << p);
            }
            if (i < tok.size()) {  // "cities" keyword
                for (++i; i < tok.size(); ++i) {
                    try {
                        f.adjacent_cities.push_back(static_cast<std::uint8_t>(std::stoi(tok[i])));
                    } catch (...) {
                        fail("bad city slot: " + tok[i]);
                    }
                }
            }
            if (f.halves == 0) fail("field needs at least one half");
            current->features.push_back(std::move(f));
        } else if (tok[0] == "monastery") {
            if (!current) fail("feature line outside a tile block");
            FeatureTemplate f;
            f.kind = FeatureKind::Monastery;
            current->features.push_back(std::move(f));
        } else {
            fail("unknown directive: " + tok[0]);
        }
    }
    for (TileKind& k : set.kinds) k.finalize();
    if (start_id.empty()) throw std::runtime_error("tileset: missing start directive");
    set.start_kind = set.kind_index(start_id);
    if (set.start_kind < 0) throw std::runtime_error("tileset: start tile not defined");
    validate_tileset(set);
    return set;
}

inline std::string serialize_tileset(const TileSet& set) {
    std::ostringstream out;
    out << "start " << set.kinds[static_cast<std::size_t>(set.start_kind)].id << "\n";
    for (const TileKind& k : set.kinds) {
        out << "tile " << k.id << " " << k.multiplicity << " ";
        for (int d = 0; d < 4; ++d) {
            out << (k.edges[d] == EdgeKind::City ? 'C'
                    : k.edges[d] == EdgeKind::Road ? 'R' : 'F');
        }
        if (k.pennant) out << " pennant";
        out << "\n";
        for (const FeatureTemplate& f : k.features) {
            switch (f.kind) {
                case FeatureKind::City:
                case FeatureKind::Road:
                    out << (f.kind == FeatureKind::City ? "  city" : "  road");
                    for (int d = 0; d < 4; ++d) {
                        if ((f.sides >> d) & 1) out << ' ' << detail::kSideNames[d];
                    }
                    break;
                case FeatureKind::Field:
                    out << "  field";
                    for (int p = 0; p < 8; ++p) {
                        if ((f.halves >> p) & 1) out << ' ' << detail::kHalfNames[p];
                    }
                    if (!f.adjacent_cities.empty()) {
                        out << " cities";
                        for (std::uint8_t c : f.adjacent_cities) out << ' ' << int(c);
                    }
                    break;
                case FeatureKind::Monastery:
                    out << "  monastery";
                    break;
            }
            out << "\n";
        }
    }
    return out.str();
}

inline const TileSet& standard_tileset() {
    static const TileSet set = parse_tileset(standard_tileset_text());
    return set;
}

}  // namespace carcas
