#include "icpattack/icp.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "icpattack/errors.hpp"

namespace icpattack {

void IcpConfig::validate() const {
  if (max_iterations < 0) throw ValidationError("IcpConfig: max_iterations must be >= 0");
  if (!(tolerance > 0.0)) throw ValidationError("IcpConfig: tolerance must be > 0");
  if (!(trim_distance > 0.0)) throw ValidationError("IcpConfig: trim_distance must be > 0");
  if (!(cauchy_k > 0.0)) throw ValidationError("IcpConfig: cauchy_k must be > 0");
  bool any = false;
  for (bool f : dof_mask) any = any || f;
  if (!any) throw ValidationError("IcpConfig: at least one DOF must be free");
}

IcpConfig shapenet_icp_config() {
  IcpConfig c;
  c.max_iterations = 150;
  c.tolerance = 1e-4;
  c.trim_distance = 0.3;
  c.cauchy_k = 0.15;
  c.dof_mask = kPlanarDof;
  return c;
}

IcpConfig boreas_icp_config() {
  IcpConfig c;
  c.max_iterations = 100;
  c.tolerance = 1e-4;
  c.trim_distance = 5.0;
  c.cauchy_k = 1.0;
  c.dof_mask = kFullDof;
  return c;
}

IcpConfig icp_config_profile(const std::string& name) {
  if (name == "shapenet") return shapenet_icp_config();
  if (name == "boreas") return boreas_icp_config();
  throw ValidationError("unknown ICP profile: " + name);
}

std::vector<Correspondence> associate(const PointCloud& scan, const SpatialIndex& map_index,
                                      const Pose3d& current, double trim_distance) {
  std::vector<Correspondence> out;
  out.reserve(static_cast<std::size_t>(scan.size()));
  for (Eigen::Index i = 0; i < scan.size(); ++i) {
    const Eigen::Vector3d moved = current * scan.points.row(i).transpose();
    const auto nb = map_index.nearest(moved);
    if (nb.distance <= trim_distance) out.push_back({i, nb.index, nb.distance});
  }
  if (out.empty())
    throw AssociationEmptyError("associate: no correspondence within trim distance");
  return out;
}

double cauchy_weight(double residual, double k) {
  const double u = residual / k;
  return 1.0 / (1.0 + u * u);
}

double cauchy_cost(double residual, double k) {
  const double u = residual / k;
  return 0.5 * k * k * std::log1p(u * u);
}

std::vector<int> free_dof_indices(const DofMask& mask) {
  std::vector<int> free_idx;
  for (int d = 0; d < 6; ++d)
    if (mask[static_cast<std::size_t>(d)]) free_idx.push_back(d);
  return free_idx;
}

IcpStep icp_step(const std::vector<Correspondence>& correspondences, const PointCloud& scan,
                 const PointCloud& map, const Pose3d& current, double cauchy_k,
                 const DofMask& dof_mask, IcpStepTrace* record) {
  if (!map.has_normals()) throw ValidationError("icp_step: map has no normals");

  const std::vector<int> free_idx = free_dof_indices(dof_mask);
  const int nf = static_cast<int>(free_idx.size());
  if (nf == 0) throw ValidationError("icp_step: no free DOF");
  if (static_cast<int>(correspondences.size()) < nf)
    throw DegenerateGeometryError("icp_step: fewer correspondences than free DOFs");

  if (record) {
    record->residuals.clear();
    record->weights.clear();
    record->residuals.reserve(correspondences.size());
    record->weights.reserve(correspondences.size());
  }

  Mat6<double> a6 = Mat6<double>::Zero();
  Twist6d b6 = Twist6d::Zero();
  for (const auto& c : correspondences) {
    const Eigen::Vector3d p = scan.points.row(c.scan_index).transpose();
    const Eigen::Vector3d q = map.points.row(c.map_index).transpose();
    const Eigen::Vector3d n = map.normals->row(c.map_index).transpose();
    const Eigen::Vector3d y = current * p;
    const double r = n.dot(y - q);
    const double w = cauchy_weight(r, cauchy_k);
    Twist6d j;
    j.head<3>() = n;
    j.tail<3>() = y.cross(n);
    a6.noalias() += w * j * j.transpose();
    b6.noalias() -= w * r * j;
    if (record) {
      record->residuals.push_back(r);
      record->weights.push_back(w);
    }
  }

  Eigen::MatrixXd a(nf, nf);
  Eigen::VectorXd b(nf);
  for (int r = 0; r < nf; ++r) {
    b(r) = b6(free_idx[static_cast<std::size_t>(r)]);
    for (int c = 0; c < nf; ++c)
      a(r, c) = a6(free_idx[static_cast<std::size_t>(r)], free_idx[static_cast<std::size_t>(c)]);
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const double lambda_min = eig.eigenvalues()(0);
  const double lambda_max = eig.eigenvalues()(nf - 1);
  if (!(lambda_max > 0.0) || lambda_min <= 0.0 || lambda_max / lambda_min > 1e12)
    throw DegenerateGeometryError("icp_step: normal system condition number > 1e12");

  const Eigen::VectorXd delta_free =
      eig.eigenvectors() *
      (eig.eigenvectors().transpose() * b).cwiseQuotient(eig.eigenvalues());

  if (record) record->a_free = a;

  IcpStep step;
  step.delta = Twist6d::Zero();
  for (int r = 0; r < nf; ++r) step.delta(free_idx[static_cast<std::size_t>(r)]) = delta_free(r);
  step.updated = exp_se3(step.delta) * current;
  return step;
}

namespace {

double robust_cost(const std::vector<Correspondence>& correspondences, const PointCloud& scan,
                   const PointCloud& map, const Pose3d& pose, double cauchy_k) {
  double cost = 0.0;
  for (const auto& c : correspondences) {
    const Eigen::Vector3d y = pose * scan.points.row(c.scan_index).transpose();
    const Eigen::Vector3d q = map.points.row(c.map_index).transpose();
    const Eigen::Vector3d n = map.normals->row(c.map_index).transpose();
    cost += cauchy_cost(n.dot(y - q), cauchy_k);
  }
  return cost;
}

}  // namespace

IcpResult run_icp_traced(const PointCloud& scan, const PointCloud& map_with_normals,
                         const SpatialIndex& index, const IcpConfig& config,
                         std::vector<IcpStepTrace>* trace) {
  config.validate();
  if (scan.size() == 0) throw ValidationError("run_icp: empty scan");
  if (!map_with_normals.has_normals()) throw ValidationError("run_icp: map has no normals");
  if (trace) trace->clear();

  IcpResult result;
  result.estimate = config.initial_guess;
  Pose3d current = config.initial_guess;

  for (int it = 1; it <= config.max_iterations; ++it) {
    try {
      auto correspondences = associate(scan, index, current, config.trim_distance);
      IcpStepTrace record;
      const IcpStep step =
          icp_step(correspondences, scan, map_with_normals, current, config.cauchy_k,
                   config.dof_mask, trace ? &record : nullptr);
      if (trace) {
        record.pose_before = current;
        record.delta = step.delta;
        record.correspondences = std::move(correspondences);
        trace->push_back(std::move(record));
      }
      current = step.updated;
      result.iterations = it;
      const auto& corr = trace ? trace->back().correspondences : correspondences;
      result.correspondence_count = static_cast<Eigen::Index>(corr.size());
      result.final_cost = robust_cost(corr, scan, map_with_normals, current, config.cauchy_k);
      if (step.delta.norm() < config.tolerance) {
        result.converged = true;
        break;
      }
    } catch (const AssociationEmptyError& e) {
      throw AssociationEmptyError("iteration " + std::to_string(it) + ": " + e.what());
    } catch (const DegenerateGeometryError& e) {
      throw DegenerateGeometryError("iteration " + std::to_string(it) + ": " + e.what());
    }
  }
  result.estimate = current;
  return result;
}

IcpResult run_icp(const PointCloud& scan, const PointCloud& map, const IcpConfig& config) {
  if (map.size() == 0) throw ValidationError("run_icp: empty map");
  const PointCloud map_with_normals = map.has_normals() ? map : estimate_normals(map);
  const SpatialIndex index = build_index(map_with_normals);
  return run_icp_traced(scan, map_with_normals, index, config, nullptr);
}

}  // namespace icpattack
