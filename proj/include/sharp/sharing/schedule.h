// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0
//
// Replacement schedules: reference layers j whose MLP weights are stored and
// the contiguous runs of target layers j+1..j' predicted from them. Layers are
// numbered 1..N.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sharp::sharing {

enum class ScheduleKind { Next, Next2, Back, Front, More, Max, Ori, Custom };

const char* schedule_name(ScheduleKind k);
ScheduleKind schedule_from_name(std::string_view name);

struct Group {
    std::size_t reference = 0;
    std::vector<std::size_t> targets;

    friend bool operator==(const Group&, const Group&) = default;
};

class ScheduleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ReplacementSchedule {
    std::size_t n_layers = 0;
    ScheduleKind kind = ScheduleKind::Custom;
    std::vector<Group> groups;

    std::size_t target_count() const;
    std::vector<std::size_t> targets() const;
    std::vector<std::size_t> references() const;
    std::optional<std::size_t> reference_of(std::size_t layer) const;
    bool is_target(std::size_t layer) const;
    // Layers whose MLP weights stay in storage: N - X.
    std::size_t stored_layers() const { return n_layers - target_count(); }

    friend bool operator==(const ReplacementSchedule& a, const ReplacementSchedule& b) {
        return a.n_layers == b.n_layers && a.groups == b.groups;
    }
};

// Throws ScheduleError on: references not strictly increasing, a reference
// inside an earlier run, an empty or non-contiguous run, a run not starting at
// j+1, layers outside [1,N]. With exclude_boundary, targets may not be 1 or N.
void validate(const ReplacementSchedule& s, bool exclude_boundary);

// N = 32 reproduces the published listings; other N follow the structural
// rules documented in README.md. Requires N >= 6.
ReplacementSchedule build_schedule(ScheduleKind kind, std::size_t n_layers);

// Validated custom schedule from explicit groups.
ReplacementSchedule custom_schedule(std::size_t n_layers, std::vector<Group> groups);

// "(3:4), (5:6,7)" listing.
std::string format_groups(const ReplacementSchedule& s);

// Text file form: a "layers: N" line followed by the listing.
std::string format_schedule(const ReplacementSchedule& s);
ReplacementSchedule parse_schedule(std::string_view text);

}  // namespace sharp::sharing
