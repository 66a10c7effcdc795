#pragma once

// Multiple-proposal importance Gauss-Hermite. Every proposal contributes its own
// grid of N nodes; the pooled M*N nodes are weighted either against the proposal
// that placed them (SM) or against the equal mixture of all proposals (DM).

#include "iq/igh.hpp"

#include <string>
#include <vector>

namespace iq {

enum class MIGHScheme { SM, DM };

std::string to_string(MIGHScheme scheme);

/// Pooled weighted set of size M*N, proposal-major. Pointsets must all have the same N.
WeightedSet migh_weights(const std::vector<PointSet>& pointsets, const TargetDensity& target,
                         const std::vector<GaussianProposal>& proposals, MIGHScheme scheme);

/// Estimates over the pooled set; normalization runs over all M*N combined weights.
Estimates migh_estimate(const WeightedSet& pooled, const TestFunction& f, std::optional<double> log_z, Eigen::Index m,
                        Eigen::Index n);

}  // namespace iq
