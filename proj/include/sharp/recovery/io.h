// Copyright (c) 2026, The sharp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>

#include "sharp/sharing/transform.h"

namespace sharp::recovery {

// Same container as checkpoints under magic "SHRQ"; metadata holds kind, rank
// and the schedule listing.
void save_recovery(const sharing::RecoveryParams& rp, const std::filesystem::path& path);
sharing::RecoveryParams load_recovery(const std::filesystem::path& path);

// "step,loss" CSV.
void write_loss_csv(const std::filesystem::path& path, std::span<const double> losses);

}  // namespace sharp::recovery
