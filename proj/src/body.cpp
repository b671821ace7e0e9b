#include "drape/body.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace drape {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

namespace {

enum class Part { Torso, Head, Arm, Leg };

struct JointSpec {
  const char* name;
  int parent;
  Vec3 pos;
};

struct CapsuleSpec {
  int owner;   // controlling joint
  int a;       // joint index of endpoint A
  int b;       // joint index of endpoint B, or -1 for a stub
  Vec3 offset_b;
  double radius;
  Part part;
};

// Humanoid joints ordered so every prefix >= kHumanoidMinJoints is a valid
// tree (parents precede children). T-pose, y up, pelvis at y = 1.
constexpr int kHumanoidMinJoints = 16;
constexpr int kHumanoidMaxJoints = 24;

std::vector<JointSpec> humanoid_joints() {
  return {
      {"pelvis", -1, {0.0, 1.00, 0.0}},      {"spine", 0, {0.0, 1.12, 0.0}},
      {"chest", 1, {0.0, 1.27, 0.0}},        {"head", 2, {0.0, 1.52, 0.0}},
      {"l_shoulder", 2, {0.18, 1.42, 0.0}},  {"r_shoulder", 2, {-0.18, 1.42, 0.0}},
      {"l_elbow", 4, {0.47, 1.42, 0.0}},     {"r_elbow", 5, {-0.47, 1.42, 0.0}},
      {"l_wrist", 6, {0.74, 1.42, 0.0}},     {"r_wrist", 7, {-0.74, 1.42, 0.0}},
      {"l_hip", 0, {0.095, 0.95, 0.0}},      {"r_hip", 0, {-0.095, 0.95, 0.0}},
      {"l_knee", 10, {0.10, 0.52, 0.0}},     {"r_knee", 11, {-0.10, 0.52, 0.0}},
      {"l_ankle", 12, {0.105, 0.09, 0.0}},   {"r_ankle", 13, {-0.105, 0.09, 0.0}},
      {"neck", 2, {0.0, 1.40, 0.0}},         {"l_hand", 8, {0.80, 1.42, 0.0}},
      {"r_hand", 9, {-0.80, 1.42, 0.0}},     {"l_foot", 14, {0.105, 0.05, 0.08}},
      {"r_foot", 15, {-0.105, 0.05, 0.08}},  {"l_toe", 19, {0.105, 0.03, 0.16}},
      {"r_toe", 20, {-0.105, 0.03, 0.16}},   {"jaw", 3, {0.0, 1.56, 0.05}},
  };
}

std::vector<CapsuleSpec> humanoid_capsules(int joint_count) {
  auto in = [joint_count](int j) { return j < joint_count; };
  std::vector<CapsuleSpec> specs = {
      {0, 0, 1, Vec3::Zero(), 0.105, Part::Torso},
      {1, 1, 2, Vec3::Zero(), 0.115, Part::Torso},
      {2, 2, 3, Vec3::Zero(), 0.050, Part::Torso},                // neck column
      {3, 3, -1, {0.0, 0.16, 0.0}, 0.090, Part::Head},            // skull stub
      {2, 2, 4, Vec3::Zero(), 0.050, Part::Torso},                // clavicles
      {2, 2, 5, Vec3::Zero(), 0.050, Part::Torso},
      {4, 4, 6, Vec3::Zero(), 0.045, Part::Arm},
      {5, 5, 7, Vec3::Zero(), 0.045, Part::Arm},
      {6, 6, 8, Vec3::Zero(), 0.035, Part::Arm},
      {7, 7, 9, Vec3::Zero(), 0.035, Part::Arm},
      {8, 8, -1, {0.07, 0.0, 0.0}, 0.030, Part::Arm},             // hand stubs
      {9, 9, -1, {-0.07, 0.0, 0.0}, 0.030, Part::Arm},
      {0, 0, 10, Vec3::Zero(), 0.085, Part::Torso},
      {0, 0, 11, Vec3::Zero(), 0.085, Part::Torso},
      {10, 10, 12, Vec3::Zero(), 0.070, Part::Leg},
      {11, 11, 13, Vec3::Zero(), 0.070, Part::Leg},
      {12, 12, 14, Vec3::Zero(), 0.050, Part::Leg},
      {13, 13, 15, Vec3::Zero(), 0.050, Part::Leg},
      {14, 14, -1, {0.0, -0.03, 0.11}, 0.040, Part::Leg},         // foot stubs
      {15, 15, -1, {0.0, -0.03, 0.11}, 0.040, Part::Leg},
  };
  // Extremity joints past 16 refine the stubs.
  std::vector<CapsuleSpec> extra = {
      {16, 16, -1, {0.0, 0.06, 0.0}, 0.045, Part::Torso},
      {17, 17, -1, {0.05, 0.0, 0.0}, 0.028, Part::Arm},
      {18, 18, -1, {-0.05, 0.0, 0.0}, 0.028, Part::Arm},
      {19, 19, 21, Vec3::Zero(), 0.035, Part::Leg},
      {20, 20, 22, Vec3::Zero(), 0.035, Part::Leg},
      {23, 23, -1, {0.0, 0.0, 0.04}, 0.040, Part::Head},
  };
  for (const auto& c : extra) {
    if (in(c.owner) && in(c.a) && (c.b < 0 || in(c.b))) specs.push_back(c);
  }
  return specs;
}

// Deterministic orthonormal frame perpendicular to the (unit) axis.
void axis_frame(const Vec3& axis, Vec3& u, Vec3& v) {
  Vec3 pick = std::abs(axis.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  u = axis.cross(pick).normalized();
  v = axis.cross(u);  // unit, right-handed with (u, v, axis)
}

struct MeshBuilder {
  TriMesh mesh;
  std::vector<int> vertex_capsule;

  int add_vertex(const Vec3& p, int capsule) {
    mesh.vertices.push_back(p);
    vertex_capsule.push_back(capsule);
    return mesh.vertex_count() - 1;
  }

  void connect_rings(const std::vector<int>& lower, const std::vector<int>& upper) {
    const int n = static_cast<int>(lower.size());
    for (int k = 0; k < n; ++k) {
      const int k1 = (k + 1) % n;
      mesh.faces.push_back({lower[k], lower[k1], upper[k1]});
      mesh.faces.push_back({lower[k], upper[k1], upper[k]});
    }
  }

  // Fans around an apex. `apex_below` selects the winding so triangles stay
  // outward for the bottom vs. top cap.
  void connect_apex(int apex, const std::vector<int>& ring, bool apex_below) {
    const int n = static_cast<int>(ring.size());
    for (int k = 0; k < n; ++k) {
      const int k1 = (k + 1) % n;
      if (apex_below) {
        mesh.faces.push_back({apex, ring[k1], ring[k]});
      } else {
        mesh.faces.push_back({apex, ring[k], ring[k1]});
      }
    }
  }

  void append_capsule(int capsule_id, const Vec3& a, const Vec3& b, double radius,
                      int ring_verts) {
    const Vec3 d = b - a;
    const double len = d.norm();
    const Vec3 axis = len > 1e-12 ? Vec3(d / len) : Vec3(0, 1, 0);
    Vec3 u, v;
    axis_frame(axis, u, v);

    auto ring_at = [&](const Vec3& center, double r, double axial_push) {
      std::vector<int> ids(ring_verts);
      for (int k = 0; k < ring_verts; ++k) {
        const double phi = 2.0 * M_PI * k / ring_verts;
        ids[k] = add_vertex(center + axial_push * axis + r * (std::cos(phi) * u + std::sin(phi) * v),
                            capsule_id);
      }
      return ids;
    };

    const int cap_rings = std::max(1, ring_verts / 4);
    const double spacing = std::max(0.03, 2.0 * M_PI * radius / ring_verts);
    const int axial_rings = std::max(2, static_cast<int>(std::round(len / spacing)) + 1);

    const int apex_a = add_vertex(a - radius * axis, capsule_id);
    std::vector<std::vector<int>> rings;
    for (int s = 1; s < cap_rings; ++s) {
      const double xi = (M_PI / 2.0) * s / cap_rings;
      rings.push_back(ring_at(a, radius * std::sin(xi), -radius * std::cos(xi)));
    }
    for (int i = 0; i < axial_rings; ++i) {
      const double t = static_cast<double>(i) / (axial_rings - 1);
      rings.push_back(ring_at(a + t * d, radius, 0.0));
    }
    for (int s = cap_rings - 1; s >= 1; --s) {
      const double xi = (M_PI / 2.0) * s / cap_rings;
      rings.push_back(ring_at(b, radius * std::sin(xi), radius * std::cos(xi)));
    }
    const int apex_b = add_vertex(b + radius * axis, capsule_id);

    connect_apex(apex_a, rings.front(), true);
    for (size_t i = 0; i + 1 < rings.size(); ++i) connect_rings(rings[i], rings[i + 1]);
    connect_apex(apex_b, rings.back(), false);
  }
};

Eigen::MatrixXd smooth_weights(const TriMesh& mesh, const std::vector<CapsuleSpec>& caps,
                               const std::vector<JointSpec>& joints, int joint_count) {
  const double sigma = 0.055;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(mesh.vertex_count(), joint_count);
  for (int i = 0; i < mesh.vertex_count(); ++i) {
    const Vec3& p = mesh.vertices[i];
    for (const auto& c : caps) {
      const Vec3 a = joints[c.a].pos;
      const Vec3 b = c.b >= 0 ? joints[c.b].pos : Vec3(joints[c.a].pos + c.offset_b);
      const double surface_d = std::max(0.0, point_segment_distance(p, a, b) - c.radius);
      const double fall = std::exp(-(surface_d / sigma) * (surface_d / sigma));
      if (fall > 1e-12) w(i, c.owner) = std::max(w(i, c.owner), fall);
    }
  }
  for (int i = 0; i < w.rows(); ++i) {
    const double s = w.row(i).sum();
    if (s <= 0.0) {
      w(i, 0) = 1.0;  // unreachable for capsule-generated vertices
    } else {
      w.row(i) /= s;
    }
  }
  return w;
}

Eigen::MatrixXd nearest_vertex_regressor(const TriMesh& mesh,
                                         const std::vector<JointSpec>& joints,
                                         int joint_count) {
  const int k = 6;
  Eigen::MatrixXd reg = Eigen::MatrixXd::Zero(joint_count, mesh.vertex_count());
  for (int j = 0; j < joint_count; ++j) {
    std::vector<std::pair<double, int>> dist(mesh.vertex_count());
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      dist[i] = {(mesh.vertices[i] - joints[j].pos).norm(), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    double total = 0.0;
    for (int t = 0; t < k; ++t) total += 1.0 / (dist[t].first + 1e-6);
    for (int t = 0; t < k; ++t) reg(j, dist[t].second) = (1.0 / (dist[t].first + 1e-6)) / total;
  }
  return reg;
}

std::vector<Eigen::MatrixXd> make_shape_dirs(const MeshBuilder& built,
                                             const std::vector<CapsuleSpec>& caps,
                                             const std::vector<JointSpec>& joints,
                                             int beta_dim, unsigned seed) {
  const TriMesh& mesh = built.mesh;
  const int n = mesh.vertex_count();

  // Radial direction of each vertex off its generating capsule axis.
  std::vector<Vec3> radial(n);
  std::vector<Part> part(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = caps[built.vertex_capsule[i]];
    const Vec3 a = joints[c.a].pos;
    const Vec3 b = c.b >= 0 ? joints[c.b].pos : Vec3(joints[c.a].pos + c.offset_b);
    const Vec3 ab = b - a;
    const double len2 = std::max(ab.squaredNorm(), 1e-18);
    const double t = std::clamp((mesh.vertices[i] - a).dot(ab) / len2, 0.0, 1.0);
    Vec3 r = mesh.vertices[i] - (a + t * ab);
    radial[i] = r.norm() > 1e-12 ? Vec3(r.normalized()) : Vec3(0, 1, 0);
    part[i] = c.part;
  }

  double y_min = 1e9, y_max = -1e9;
  for (const auto& v : mesh.vertices) {
    y_min = std::min(y_min, v.y());
    y_max = std::max(y_max, v.y());
  }
  const double height = std::max(1e-6, y_max - y_min);
  const double y_pelvis = joints[0].pos.y();
  const double y_belly = 0.5 * (joints[0].pos.y() + joints[2].pos.y());
  const double y_shoulder = joints[2].pos.y() + 0.15;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  std::vector<Eigen::MatrixXd> dirs;
  for (int d = 0; d < beta_dim; ++d) {
    Eigen::MatrixXd dir = Eigen::MatrixXd::Zero(n, 3);
    for (int i = 0; i < n; ++i) {
      const Vec3& p = mesh.vertices[i];
      Vec3 off = Vec3::Zero();
      switch (d) {
        case 0:  // overall girth
          off = 0.025 * radial[i];
          break;
        case 1:  // stature
          off = Vec3(0, 0.08 * (p.y() - y_min) / height, 0);
          break;
        case 2: {  // belly
          const double g = std::exp(-std::pow((p.y() - y_belly) / 0.12, 2));
          if (part[i] == Part::Torso) off = 0.04 * g * radial[i];
          break;
        }
        case 3: {  // shoulder width
          const double g = std::exp(-std::pow((p.y() - y_shoulder) / 0.10, 2));
          off = Vec3(0.03 * g * (p.x() >= 0 ? 1.0 : -1.0), 0, 0);
          break;
        }
        case 4:  // limb girth
          if (part[i] == Part::Arm || part[i] == Part::Leg) off = 0.02 * radial[i];
          break;
        case 5:  // leg length
          if (p.y() < y_pelvis) off = Vec3(0, -0.06 * (y_pelvis - p.y()) / y_pelvis, 0);
          break;
        default: {
          // Low-frequency seeded field, radial so the surface stays smooth.
          const Vec3 k(3.0 * uni(rng), 3.0 * uni(rng), 3.0 * uni(rng));
          const double phase = M_PI * uni(rng);
          off = 0.008 * std::sin(k.dot(p) + phase) * radial[i];
          break;
        }
      }
      dir.row(i) = off.transpose();
    }
    dirs.push_back(std::move(dir));
  }
  return dirs;
}

}  // namespace

BodyModel build_procedural_body(int joint_count, int resolution, unsigned seed) {
  if (joint_count < 2) throw ValidationError("joint_count must be >= 2");
  if (resolution < 4) {
    throw ValidationError("resolution must be >= 4 to produce watertight segments");
  }

  std::vector<JointSpec> joints;
  std::vector<CapsuleSpec> caps;
  if (joint_count >= kHumanoidMinJoints) {
    const int j = std::min(joint_count, kHumanoidMaxJoints);
    if (joint_count > kHumanoidMaxJoints) {
      throw ValidationError("humanoid supports at most 24 joints");
    }
    auto all = humanoid_joints();
    joints.assign(all.begin(), all.begin() + j);
    caps = humanoid_capsules(j);
  } else {
    // Plain vertical capsule chain.
    for (int j = 0; j < joint_count; ++j) {
      joints.push_back({"seg", j - 1, Vec3(0, 0.25 * j, 0)});
      if (j > 0) caps.push_back({j - 1, j - 1, j, Vec3::Zero(), 0.08, Part::Torso});
    }
    caps.push_back({joint_count - 1, joint_count - 1, -1, Vec3(0, 0.12, 0), 0.08, Part::Torso});
  }

  MeshBuilder builder;
  for (size_t c = 0; c < caps.size(); ++c) {
    const Vec3 a = joints[caps[c].a].pos;
    const Vec3 b = caps[c].b >= 0 ? joints[caps[c].b].pos : Vec3(a + caps[c].offset_b);
    builder.append_capsule(static_cast<int>(c), a, b, caps[c].radius, resolution);
  }
  validate(builder.mesh);

  BodyModel model;
  model.template_mesh = builder.mesh;
  model.parents.resize(joints.size());
  for (size_t j = 0; j < joints.size(); ++j) model.parents[j] = joints[j].parent;
  model.joint_regressor = nearest_vertex_regressor(builder.mesh, joints, joint_count);
  model.skin_weights = smooth_weights(builder.mesh, caps, joints, joint_count);
  model.shape_dirs = make_shape_dirs(builder, caps, joints, 10, seed);
  for (const auto& c : caps) {
    model.capsules.push_back({c.owner, c.a, c.b, c.offset_b, c.radius});
  }
  return model;
}

TriMesh unposed_body(const BodyModel& model, const Eigen::VectorXd& beta) {
  if (beta.size() != model.beta_dim()) {
    throw ValidationError("beta has " + std::to_string(beta.size()) + " entries, model expects " +
                          std::to_string(model.beta_dim()));
  }
  TriMesh out = model.template_mesh;
  for (int k = 0; k < model.beta_dim(); ++k) {
    if (beta[k] == 0.0) continue;
    for (int i = 0; i < out.vertex_count(); ++i) {
      out.vertices[i] += beta[k] * model.shape_dirs[k].row(i).transpose();
    }
  }
  return out;
}

double body_height(const BodyModel& model, const Eigen::VectorXd& beta) {
  const TriMesh shaped = unposed_body(model, beta);
  double y_min = 1e9, y_max = -1e9;
  for (const auto& v : shaped.vertices) {
    y_min = std::min(y_min, v.y());
    y_max = std::max(y_max, v.y());
  }
  return y_max - y_min;
}

Eigen::MatrixXd rest_joints(const BodyModel& model, const Eigen::VectorXd& beta) {
  const TriMesh shaped = unposed_body(model, beta);
  Eigen::MatrixXd verts(shaped.vertex_count(), 3);
  for (int i = 0; i < shaped.vertex_count(); ++i) verts.row(i) = shaped.vertices[i].transpose();
  return model.joint_regressor * verts;
}

namespace {

Eigen::Matrix3d axis_angle_rotation(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle < 1e-12) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix();
}

// Rest endpoints of a capsule for given rest joint locations.
std::pair<Vec3, Vec3> capsule_rest_endpoints(const BodyCapsule& cap,
                                             const Eigen::MatrixXd& joints_rest) {
  const Vec3 a = joints_rest.row(cap.joint_a).transpose();
  const Vec3 b = cap.joint_b >= 0 ? Vec3(joints_rest.row(cap.joint_b).transpose())
                                  : Vec3(a + cap.offset_b);
  return {a, b};
}

// Capsule radii measured on the shaped mesh so collision proxies track the
// shape blendshapes. Vertices are binned to their nearest template capsule
// axis, then each capsule's radius is the mean shaped axis distance.
std::vector<double> shaped_capsule_radii(const BodyModel& model, const TriMesh& shaped,
                                         const Eigen::MatrixXd& template_joints,
                                         const Eigen::MatrixXd& shaped_joints) {
  const size_t C = model.capsules.size();
  std::vector<std::pair<Vec3, Vec3>> template_seg(C), shaped_seg(C);
  for (size_t c = 0; c < C; ++c) {
    template_seg[c] = capsule_rest_endpoints(model.capsules[c], template_joints);
    shaped_seg[c] = capsule_rest_endpoints(model.capsules[c], shaped_joints);
  }
  std::vector<double> sum(C, 0.0);
  std::vector<int> count(C, 0);
  for (int i = 0; i < model.vertex_count(); ++i) {
    const Vec3& tp = model.template_mesh.vertices[i];
    int best = 0;
    double best_d = 1e18;
    for (size_t c = 0; c < C; ++c) {
      const double d = point_segment_distance(tp, template_seg[c].first, template_seg[c].second);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    sum[best] += point_segment_distance(shaped.vertices[i], shaped_seg[best].first,
                                        shaped_seg[best].second);
    count[best] += 1;
  }
  std::vector<double> radii(C);
  for (size_t c = 0; c < C; ++c) {
    radii[c] = count[c] > 0 ? sum[c] / count[c] : model.capsules[c].radius;
  }
  return radii;
}

}  // namespace

BodyState skin_body(const BodyModel& model, const Eigen::VectorXd& beta,
                    const Eigen::VectorXd& theta, const Vec3& translation) {
  const int J = model.joint_count();
  if (theta.size() != 3 * J) {
    throw ValidationError("theta has " + std::to_string(theta.size()) + " entries, expected " +
                          std::to_string(3 * J));
  }
  if (!theta.allFinite() || !beta.allFinite() || !translation.allFinite()) {
    throw ValidationError("non-finite pose, shape, or translation");
  }

  const TriMesh shaped = unposed_body(model, beta);
  Eigen::MatrixXd shaped_verts(shaped.vertex_count(), 3);
  for (int i = 0; i < shaped.vertex_count(); ++i) {
    shaped_verts.row(i) = shaped.vertices[i].transpose();
  }
  const Eigen::MatrixXd joints_rest = model.joint_regressor * shaped_verts;

  // Global joint affines over the tree, then vertex skinning matrices
  // S_j = A_j * translate(-rest_j).
  std::vector<Eigen::Matrix3d> rot(J);
  std::vector<Vec3> trans(J);
  for (int j = 0; j < J; ++j) {
    const Eigen::Matrix3d r = axis_angle_rotation(theta.segment<3>(3 * j));
    const Vec3 rest_j = joints_rest.row(j).transpose();
    if (model.parents[j] < 0) {
      rot[j] = r;
      trans[j] = rest_j;
    } else {
      const int p = model.parents[j];
      const Vec3 rest_p = joints_rest.row(p).transpose();
      rot[j] = rot[p] * r;
      trans[j] = rot[p] * (rest_j - rest_p) + trans[p];
    }
  }
  std::vector<Eigen::Matrix3d> skin_rot(J);
  std::vector<Vec3> skin_trans(J);
  for (int j = 0; j < J; ++j) {
    skin_rot[j] = rot[j];
    skin_trans[j] = trans[j] - rot[j] * Vec3(joints_rest.row(j).transpose());
  }

  BodyState state;
  state.beta = beta;
  state.theta = theta;
  state.root_translation = translation;
  state.posed_mesh.faces = model.template_mesh.faces;
  state.posed_mesh.vertices.resize(shaped.vertex_count());
  for (int i = 0; i < shaped.vertex_count(); ++i) {
    const Vec3 v = shaped.vertices[i];
    Vec3 out = Vec3::Zero();
    for (int j = 0; j < J; ++j) {
      const double w = model.skin_weights(i, j);
      if (w == 0.0) continue;
      out += w * (skin_rot[j] * v + skin_trans[j]);
    }
    state.posed_mesh.vertices[i] = out + translation;
  }
  state.posed_joints.resize(J);
  for (int j = 0; j < J; ++j) state.posed_joints[j] = trans[j] + translation;

  Eigen::MatrixXd template_verts(model.vertex_count(), 3);
  for (int i = 0; i < model.vertex_count(); ++i) {
    template_verts.row(i) = model.template_mesh.vertices[i].transpose();
  }
  const Eigen::MatrixXd template_joints = model.joint_regressor * template_verts;
  const auto radii = shaped_capsule_radii(model, shaped, template_joints, joints_rest);
  state.posed_capsules.resize(model.capsules.size());
  for (size_t c = 0; c < model.capsules.size(); ++c) {
    const auto& cap = model.capsules[c];
    const auto [ra, rb] = capsule_rest_endpoints(cap, joints_rest);
    const int o = cap.owner_joint;
    state.posed_capsules[c].a = skin_rot[o] * ra + skin_trans[o] + translation;
    state.posed_capsules[c].b = skin_rot[o] * rb + skin_trans[o] + translation;
    state.posed_capsules[c].radius = radii[c];
  }

  double y_min = 1e9, y_max = -1e9;
  for (const auto& v : shaped.vertices) {
    y_min = std::min(y_min, v.y());
    y_max = std::max(y_max, v.y());
  }
  state.height = y_max - y_min;
  return state;
}

Eigen::MatrixXd joint_distances(const TriMesh& garment, const BodyState& state,
                                double normalizer) {
  if (normalizer <= 0.0) throw ValidationError("normalizer must be positive");
  const int J = static_cast<int>(state.posed_joints.size());
  Eigen::MatrixXd d(garment.vertex_count(), J);
  for (int i = 0; i < garment.vertex_count(); ++i) {
    for (int j = 0; j < J; ++j) {
      d(i, j) = (garment.vertices[i] - state.posed_joints[j]).norm() / normalizer;
    }
  }
  return d;
}

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

void save_body_json(const BodyModel& model, const std::string& path) {
  json doc;
  doc["format"] = "drape-body";
  doc["version"] = 1;
  doc["parents"] = model.parents;
  json verts = json::array();
  for (const auto& v : model.template_mesh.vertices) verts.push_back({v.x(), v.y(), v.z()});
  doc["template_vertices"] = std::move(verts);
  json faces = json::array();
  for (const auto& f : model.template_mesh.faces) faces.push_back({f[0], f[1], f[2]});
  doc["faces"] = std::move(faces);
  json dirs = json::array();
  for (const auto& d : model.shape_dirs) dirs.push_back(matrix_to_json(d));
  doc["shape_dirs"] = std::move(dirs);
  doc["joint_regressor"] = matrix_to_json(model.joint_regressor);
  doc["skin_weights"] = matrix_to_json(model.skin_weights);
  json caps = json::array();
  for (const auto& c : model.capsules) {
    caps.push_back({{"owner", c.owner_joint},
                    {"a", c.joint_a},
                    {"b", c.joint_b},
                    {"offset_b", {c.offset_b.x(), c.offset_b.y(), c.offset_b.z()}},
                    {"radius", c.radius}});
  }
  doc["capsules"] = std::move(caps);

  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << doc.dump();
  if (!out) throw IoError("write failed for '" + path + "'");
}

BodyModel load_body_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid body JSON: ") + e.what());
  }
  if (doc.value("format", "") != "drape-body") {
    throw ParseError("not a drape-body document: " + path);
  }

  BodyModel model;
  model.parents = doc.at("parents").get<std::vector<int>>();
  for (const auto& v : doc.at("template_vertices")) {
    model.template_mesh.vertices.emplace_back(v[0].get<double>(), v[1].get<double>(),
                                              v[2].get<double>());
  }
  for (const auto& f : doc.at("faces")) {
    model.template_mesh.faces.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
  }
  for (const auto& d : doc.at("shape_dirs")) model.shape_dirs.push_back(matrix_from_json(d));
  model.joint_regressor = matrix_from_json(doc.at("joint_regressor"));
  model.skin_weights = matrix_from_json(doc.at("skin_weights"));
  for (const auto& c : doc.at("capsules")) {
    BodyCapsule cap;
    cap.owner_joint = c.at("owner").get<int>();
    cap.joint_a = c.at("a").get<int>();
    cap.joint_b = c.at("b").get<int>();
    const auto& off = c.at("offset_b");
    cap.offset_b = Vec3(off[0].get<double>(), off[1].get<double>(), off[2].get<double>());
    cap.radius = c.at("radius").get<double>();
    model.capsules.push_back(cap);
  }
  validate(model.template_mesh);
  return model;
}

}  // namespace drape
