#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "carcas/engine.hpp"

namespace carcas {

// Line-oriented game record. Layout:
//   carcas-record v1
//   seed <n>
//   discard <tile-id>                      (zero or more, as they happen)
//   turn <n> <player> <tile-id> <x> <y> <rot-degrees> <meeple-slot|-> <score1> <score2>
//   end <score1> <score2>
// Scores on a turn line are the running totals after the move; the end
// line carries the totals after farm and incomplete-feature scoring.
struct GameRecord {
    std::uint64_t seed = 0;
    std::string text;  // full serialized record

    void header(std::uint64_t s) {
        seed = s;
        std::ostringstream out;
        out << "carcas-record v1\nseed " << s << "\n";
        text = out.str();
    }
    void discard(const std::string& tile_id) { text += "discard " + tile_id + "\n"; }
    void turn(int n, PlayerId p, const std::string& tile_id, const Action& a, int s1, int s2) {
        std::ostringstream out;
        out << "turn " << n << " " << player_name(p) << " " << tile_id << " " << a.pos.x << " "
            << a.pos.y << " " << int(a.rot) * 90 << " ";
        if (a.meeple_slot < 0) {
            out << "-";
        } else {
            out << int(a.meeple_slot);
        }
        out << " " << s1 << " " << s2 << "\n";
        text += out.str();
    }
    void end(int s1, int s2) {
        std::ostringstream out;
        out << "end " << s1 << " " << s2 << "\n";
        text += out.str();
    }
};

struct ReplayReport {
    bool ok = true;
    int line = 0;       // first offending line (1-based) when !ok
    std::string message;
    GameOutcome outcome{};
};

// Re-applies a recorded game move by move, checking tile identity,
// placement legality and the running scores. Reports the first
// divergence.
inline ReplayReport replay_record(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& m) {
        ReplayReport r;
        r.ok = false;
        r.line = line_no;
        r.message = m;
        return r;
    };
    if (!std::getline(in, line)) return fail("empty record");
    ++line_no;
    if (line != "carcas-record v1") return fail("bad record header");
    if (!std::getline(in, line)) return fail("missing seed");
    ++line_no;
    std::uint64_t seed = 0;
    {
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw >> seed) || kw != "seed") return fail("bad seed line");
    }
    GameState s = new_game(seed);
    std::vector<std::string> recorded_discards;
    bool saw_end = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        if (kw == "discard") {
            std::string id;
            if (!(ls >> id)) return fail("bad discard line");
            recorded_discards.push_back(id);
            continue;  // verified against the engine's discard list at the end
        }
        if (kw == "turn") {
            if (s.drawn < 0) {
                if (s.deck.empty()) return fail("record continues past the end of the deck");
                s = draw_tile(s);
                if (s.drawn < 0) return fail("record continues past the end of the deck");
            }
            int n = 0, x = 0, y = 0, deg = 0, s1 = 0, s2 = 0;
            std::string player, tile_id, meeple;
            if (!(ls >> n >> player >> tile_id >> x >> y >> deg >> meeple >> s1 >> s2)) {
                return fail("malformed turn line");
            }
            const std::string held = s.tiles->kinds[static_cast<std::size_t>(s.drawn)].id;
            if (tile_id != held) {
                return fail("drawn tile is " + held + ", record says " + tile_id);
            }
            if (player != player_name(s.to_move)) return fail("wrong player to move");
            Action a;
            a.pos = Coord{static_cast<std::int16_t>(x), static_cast<std::int16_t>(y)};
            if (deg % 90 != 0) return fail("bad rotation");
            a.rot = static_cast<std::uint8_t>((deg / 90) & 3);
            a.meeple_slot = meeple == "-" ? -1 : static_cast<std::int8_t>(std::stoi(meeple));
            try {
                apply_in_place(s, a);
            } catch (const std::exception& e) {
                return fail(std::string("illegal action: ") + e.what());
            }
            if (s.scores[0] != s1 || s.scores[1] != s2) {
                std::ostringstream m;
                m << "score mismatch: engine " << s.scores[0] << " " << s.scores[1]
                  << ", record " << s1 << " " << s2;
                return fail(m.str());
            }
            continue;
        }
        if (kw == "end") {
            int s1 = 0, s2 = 0;
            if (!(ls >> s1 >> s2)) return fail("malformed end line");
            if (!is_terminal(s)) return fail("end line before the deck ran out");
            if (recorded_discards.size() != s.discarded.size()) {
                return fail("discard count mismatch");
            }
            for (std::size_t i = 0; i < recorded_discards.size(); ++i) {
                if (recorded_discards[i] != s.tiles->kinds[s.discarded[i]].id) {
                    return fail("discard identity mismatch");
                }
            }
            const GameOutcome o = final_scoring(s);
            if (o.score_p1 != s1 || o.score_p2 != s2) {
                std::ostringstream m;
                m << "final score mismatch: engine " << o.score_p1 << " " << o.score_p2
                  << ", record " << s1 << " " << s2;
                return fail(m.str());
            }
            ReplayReport r;
            r.outcome = o;
            saw_end = true;
            return r;
        }
        return fail("unknown directive: " + kw);
    }
    if (!saw_end) {
        ++line_no;
        return fail("record has no end line");
    }
    return ReplayReport{};
}

}  // namespace carcas
