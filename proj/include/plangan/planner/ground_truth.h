#pragma once

#include "plangan/envs/four_rooms.h"
#include "plangan/gan/ensemble.h"

namespace plangan::planner {

using nn::DenseMatrix;
using nn::Vector;

// Stand-in for a trained ensemble on Four Rooms: the action comes from a
// doorway-waypoint controller perturbed by noise_scale * z, and the next state
// from the true dynamics. Every member is the same controller.
class GroundTruthGenerator final : public gan::TrajectoryGenerator {
 public:
  explicit GroundTruthGenerator(const envs::FourRooms& env, double noise_scale = 0.3,
                                int members = 3);

  int member_count() const override { return members_; }
  int noise_dim() const override { return 2; }
  int action_dim() const override { return 2; }
  gan::GeneratedStep Generate(int member, const DenseMatrix& states, const DenseMatrix& goals,
                              const DenseMatrix& noise) const override;

  // Noise-free controller output for one state.
  Vector Control(const Vector& state, const Vector& goal) const;

 private:
  const envs::FourRooms& env_;
  double noise_scale_;
  int members_;
};

}  // namespace plangan::planner
