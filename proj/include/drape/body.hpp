#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "drape/mesh.hpp"

namespace drape {

// Collision capsule attached to a skeleton joint. Endpoint A is joint_a's
// rest position; endpoint B is joint_b's rest position, or joint_a's plus
// offset_b when joint_b < 0 (stub segments for hands, feet, head).
struct BodyCapsule {
  int owner_joint = 0;
  int joint_a = 0;
  int joint_b = -1;
  Vec3 offset_b = Vec3::Zero();
  double radius = 0.05;
};

// Parametric skinned body: template mesh, linear shape basis, skeleton tree,
// skinning weights, and a fixed joint regressor so joints follow shape.
struct BodyModel {
  TriMesh template_mesh;
  std::vector<Eigen::MatrixXd> shape_dirs;  // beta_dim entries, each N_b x 3
  std::vector<int> parents;                 // parents[0] == -1
  Eigen::MatrixXd joint_regressor;          // J x N_b, rows convex
  Eigen::MatrixXd skin_weights;             // N_b x J, rows sum to 1
  std::vector<BodyCapsule> capsules;

  int joint_count() const { return static_cast<int>(parents.size()); }
  int beta_dim() const { return static_cast<int>(shape_dirs.size()); }
  int vertex_count() const { return template_mesh.vertex_count(); }
};

// World-space capsule for a posed body.
struct PosedCapsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.05;
};

struct BodyState {
  Eigen::VectorXd beta;
  Eigen::VectorXd theta;  // axis-angle, 3 per joint
  Vec3 root_translation = Vec3::Zero();
  TriMesh posed_mesh;
  std::vector<Vec3> posed_joints;
  std::vector<PosedCapsule> posed_capsules;
  double height = 0.0;  // unposed shaped body height, used as a normalizer

  const Vec3& root() const { return posed_joints[0]; }
};

// Capsule-segment humanoid with smooth distance-falloff skinning weights.
// joint_count in [16, 24] selects a humanoid prefix (torso, head, arms, legs,
// then extremity joints); lower counts build a plain capsule chain.
// `resolution` is the ring vertex count (>= 4). Deterministic per argument set.
BodyModel build_procedural_body(int joint_count, int resolution, unsigned seed);

// Template plus the linear shape offsets; no pose applied.
TriMesh unposed_body(const BodyModel& model, const Eigen::VectorXd& beta);

double body_height(const BodyModel& model, const Eigen::VectorXd& beta);

// Shaped rest joint locations, regressor * unposed vertices. J x 3.
Eigen::MatrixXd rest_joints(const BodyModel& model, const Eigen::VectorXd& beta);

// Linear blend skinning over the axis-angle joint chain, then a rigid
// translation. Posed joints are the joint-transform origins.
BodyState skin_body(const BodyModel& model, const Eigen::VectorXd& beta,
                    const Eigen::VectorXd& theta, const Vec3& translation);

// Distance from every garment vertex to every posed joint, over `normalizer`.
Eigen::MatrixXd joint_distances(const TriMesh& garment, const BodyState& state,
                                double normalizer);

void save_body_json(const BodyModel& model, const std::string& path);
BodyModel load_body_json(const std::string& path);

// Distance from point p to segment [a, b].
double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b);

}  // namespace drape
