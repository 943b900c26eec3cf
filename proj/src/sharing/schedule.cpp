// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#include "sharp/sharing/schedule.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sharp::sharing {

namespace {

Group run(std::size_t ref, std::size_t first, std::size_t last) {
    Group g{ref, {}};
    for (std::size_t t = first; t <= last; ++t) g.targets.push_back(t);
    return g;
}

// Runs as (reference, number of targets) at N = 32.
using Template = std::vector<std::pair<std::size_t, std::size_t>>;

const Template kBack32{{3, 1}, {5, 1}, {7, 1}, {9, 1}, {11, 1}, {13, 2}, {16, 6}, {23, 7}};
const Template kFront32{{3, 7}, {11, 6}, {18, 2}, {21, 1}, {23, 1}, {25, 1}, {27, 1}, {29, 1}};
const Template kMore32{{3, 3}, {7, 4}, {13, 9}, {23, 7}};
const Template kMax32{{2, 8}, {11, 9}, {21, 10}};

std::vector<Group> from_template(const Template& t) {
    std::vector<Group> gs;
    for (auto [ref, len] : t) gs.push_back(run(ref, ref + 1, ref + len));
    return gs;
}

std::vector<Group> next_groups(std::size_t n) {
    std::vector<Group> gs;
    for (std::size_t j = 3; j + 1 <= n - 2; j += 2) gs.push_back(run(j, j + 1, j + 1));
    return gs;
}

std::vector<Group> next2_groups(std::size_t n) {
    std::vector<Group> gs;
    for (std::size_t j = 3; j + 1 <= n - 2; j += 3) gs.push_back(run(j, j + 1, std::min(j + 2, n - 2)));
    return gs;
}

// Run lengths scaled from the 28 managed layers (3..30) at N = 32 to the N - 4
// managed layers here, then packed toward the front or the back.
std::vector<std::size_t> scaled_lengths(const Template& t, std::size_t n) {
    std::vector<std::size_t> lens;
    for (auto [ref, len] : t) lens.push_back(std::max<std::size_t>(1, len * (n - 4) / 28));
    return lens;
}

std::vector<Group> front_groups(std::size_t n) {
    std::vector<Group> gs;
    std::size_t ref = 3;
    for (std::size_t len : scaled_lengths(kFront32, n)) {
        if (ref + len > n - 2) break;
        gs.push_back(run(ref, ref + 1, ref + len));
        ref += len + 1;
    }
    return gs;
}

std::vector<Group> back_groups(std::size_t n) {
    std::vector<Group> gs;
    auto lens = scaled_lengths(kBack32, n);
    std::size_t last = n - 2;
    for (auto it = lens.rbegin(); it != lens.rend(); ++it) {
        if (last < *it + 3) break;
        const std::size_t ref = last - *it;
        gs.push_back(run(ref, ref + 1, last));
        last = ref - 1;
    }
    std::reverse(gs.begin(), gs.end());
    return gs;
}

// k near-equal contiguous blocks over [lo, hi]; later blocks take the remainder.
std::vector<Group> blocks(std::size_t lo, std::size_t hi, std::size_t k) {
    const std::size_t span = hi - lo + 1;
    k = std::min(k, span / 2);
    std::vector<Group> gs;
    std::size_t start = lo;
    for (std::size_t b = 0; b < k; ++b) {
        const std::size_t size = span / k + (b >= k - span % k ? 1 : 0);
        gs.push_back(run(start, start + 1, start + size - 1));
        start += size;
    }
    return gs;
}

std::size_t scaled_count(std::size_t k32, std::size_t n) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(k32 * n) / 32.0)));
}

std::vector<Group> ori_groups(std::size_t n) {
    const std::size_t x = next_groups(n).size();
    const std::size_t last = n - 2;
    return {run(last - x, last - x + 1, last)};
}

}  // namespace

const char* schedule_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::Next: return "next";
        case ScheduleKind::Next2: return "next2";
        case ScheduleKind::Back: return "back";
        case ScheduleKind::Front: return "front";
        case ScheduleKind::More: return "more";
        case ScheduleKind::Max: return "max";
        case ScheduleKind::Ori: return "ori";
        case ScheduleKind::Custom: return "custom";
    }
    return "?";
}

ScheduleKind schedule_from_name(std::string_view name) {
    for (auto k : {ScheduleKind::Next, ScheduleKind::Next2, ScheduleKind::Back, ScheduleKind::Front,
                   ScheduleKind::More, ScheduleKind::Max, ScheduleKind::Ori, ScheduleKind::Custom}) {
        if (name == schedule_name(k)) return k;
    }
    throw ScheduleError("unknown schedule kind: " + std::string(name));
}

std::size_t ReplacementSchedule::target_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.targets.size();
    return n;
}

std::vector<std::size_t> ReplacementSchedule::targets() const {
    std::vector<std::size_t> out;
    for (const auto& g : groups) out.insert(out.end(), g.targets.begin(), g.targets.end());
    return out;
}

std::vector<std::size_t> ReplacementSchedule::references() const {
    std::vector<std::size_t> out;
    for (const auto& g : groups) out.push_back(g.reference);
    return out;
}

std::optional<std::size_t> ReplacementSchedule::reference_of(std::size_t layer) const {
    for (const auto& g : groups) {
        if (std::find(g.targets.begin(), g.targets.end(), layer) != g.targets.end()) return g.reference;
    }
    return std::nullopt;
}

bool ReplacementSchedule::is_target(std::size_t layer) const { return reference_of(layer).has_value(); }

void validate(const ReplacementSchedule& s, bool exclude_boundary) {
    auto fail = [](const std::string& m) { throw ScheduleError("invalid schedule: " + m); };
    std::size_t prev_end = 0;
    for (std::size_t gi = 0; gi < s.groups.size(); ++gi) {
        const Group& g = s.groups[gi];
        const std::string at = "(" + std::to_string(g.reference) + ":...)";
        if (g.reference < 1 || g.reference > s.n_layers) fail("reference " + at + " outside [1,N]");
        if (g.reference <= prev_end) {
            fail("reference " + std::to_string(g.reference) + " is not after the previous run, which ends at " +
                 std::to_string(prev_end));
        }
        if (g.targets.empty()) fail("group " + at + " has no targets");
        if (g.targets.front() != g.reference + 1) {
            fail("targets of " + at + " must start at j+1 = " + std::to_string(g.reference + 1));
        }
        for (std::size_t i = 1; i < g.targets.size(); ++i) {
            if (g.targets[i] != g.targets[i - 1] + 1) fail("targets of " + at + " are not contiguous");
        }
        if (g.targets.back() > s.n_layers) fail("target " + std::to_string(g.targets.back()) + " outside [1,N]");
        if (exclude_boundary && (g.targets.back() == s.n_layers)) fail("the last layer cannot be a target");
        prev_end = g.targets.back();
    }
}

ReplacementSchedule build_schedule(ScheduleKind kind, std::size_t n) {
    if (kind == ScheduleKind::Custom) throw ScheduleError("custom schedules need an explicit listing");
    if (n < 6) throw ScheduleError("built-in schedules need at least 6 layers, got " + std::to_string(n));
    ReplacementSchedule s;
    s.n_layers = n;
    s.kind = kind;
    const bool published = n == 32;
    switch (kind) {
        case ScheduleKind::Next: s.groups = next_groups(n); break;
        case ScheduleKind::Next2: s.groups = next2_groups(n); break;
        case ScheduleKind::Back: s.groups = published ? from_template(kBack32) : back_groups(n); break;
        case ScheduleKind::Front: s.groups = published ? from_template(kFront32) : front_groups(n); break;
        case ScheduleKind::More: s.groups = published ? from_template(kMore32) : blocks(3, n - 2, scaled_count(4, n)); break;
        case ScheduleKind::Max: s.groups = published ? from_template(kMax32) : blocks(2, n - 1, scaled_count(3, n)); break;
        case ScheduleKind::Ori: s.groups = ori_groups(n); break;
        case ScheduleKind::Custom: break;
    }
    validate(s, true);
    return s;
}

ReplacementSchedule custom_schedule(std::size_t n_layers, std::vector<Group> groups) {
    ReplacementSchedule s;
    s.n_layers = n_layers;
    s.kind = ScheduleKind::Custom;
    s.groups = std::move(groups);
    validate(s, false);
    return s;
}

std::string format_groups(const ReplacementSchedule& s) {
    std::string out;
    for (std::size_t i = 0; i < s.groups.size(); ++i) {
        if (i) out += ", ";
        out += "(" + std::to_string(s.groups[i].reference) + ":";
        for (std::size_t k = 0; k < s.groups[i].targets.size(); ++k) {
            if (k) out += ",";
            out += std::to_string(s.groups[i].targets[k]);
        }
        out += ")";
    }
    return out;
}

std::string format_schedule(const ReplacementSchedule& s) {
    return "layers: " + std::to_string(s.n_layers) + "\n" + format_groups(s) + "\n";
}

ReplacementSchedule parse_schedule(std::string_view text) {
    auto fail = [](const std::string& m) { throw ScheduleError("cannot parse schedule: " + m); };
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    };
    auto number = [&]() -> std::size_t {
        skip_ws();
        const std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (start == pos) fail("expected a number at offset " + std::to_string(start));
        return std::stoul(std::string(text.substr(start, pos - start)));
    };
    auto expect = [&](char c) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c) {
            fail(std::string("expected '") + c + "' at offset " + std::to_string(pos));
        }
        ++pos;
    };
    skip_ws();
    const std::string_view key = "layers:";
    if (text.substr(pos, key.size()) != key) fail("missing 'layers: N' header");
    pos += key.size();
    std::vector<Group> groups;
    const std::size_t n = number();
    skip_ws();
    while (pos < text.size()) {
        expect('(');
        Group g;
        g.reference = number();
        expect(':');
        g.targets.push_back(number());
        skip_ws();
        while (pos < text.size() && text[pos] == ',') {
            ++pos;
            g.targets.push_back(number());
            skip_ws();
        }
        expect(')');
        groups.push_back(std::move(g));
        skip_ws();
        if (pos < text.size() && text[pos] == ',') ++pos;
        skip_ws();
    }
    return custom_schedule(n, std::move(groups));
}

}  // namespace sharp::sharing
