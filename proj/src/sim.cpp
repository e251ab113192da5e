#include "hydra/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hydra::sim {

using geometry::Detection;
using geometry::DetectionSet;
using geometry::Pose2;

const char* kind_name(AgentKind k) {
    switch (k) {
        case AgentKind::Ego: return "ego";
        case AgentKind::Homogeneous: return "homogeneous";
        case AgentKind::HetLatent: return "het_latent";
        case AgentKind::HetArch: return "het_arch";
    }
    return "?";
}

namespace {

constexpr double kStage1ConfMean = 0.85;
constexpr double kStage1ConfSpread = 0.08;
// Feature-level fusion can recover objects that no single decode fires
// on, when at least two members cover them.
constexpr double kStage1SynergyRecall = 0.5;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double circumradius(const Detection& d) { return 0.5 * std::hypot(d.length, d.width); }

Detection make_object(int class_id, double x, double y, double yaw) {
    const auto& sz = kClassSizes[static_cast<std::size_t>(class_id)];
    Detection d;
    d.x = x;
    d.y = y;
    d.z = 0.5 * sz[2];
    d.length = sz[0];
    d.width = sz[1];
    d.height = sz[2];
    d.yaw = geometry::wrap_angle(yaw);
    d.class_id = class_id;
    d.confidence = 1.0;
    return d;
}

// Uniform point in the fov disc of radius r (agent-local).
void disc_point(rng::Stream& s, double r, double& x, double& y) {
    const double rad = r * std::sqrt(s.uniform());
    const double ang = s.uniform(-geometry::kPi, geometry::kPi);
    x = rad * std::cos(ang);
    y = rad * std::sin(ang);
}

int ego_index(const ScenarioConfig& cfg) {
    for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
        if (cfg.agents[i].kind == AgentKind::Ego) return static_cast<int>(i);
    }
    throw std::invalid_argument("scenario has no ego agent");
}

}  // namespace

Scene generate_scene(const ScenarioConfig& cfg, int frame) {
    rng::Stream s = streams::make(cfg, frame, streams::kScene);
    Scene scene;

    const auto fits = [&scene](const Detection& cand) {
        for (const Detection& other : scene.objects) {
            const double min_sep = circumradius(cand) + circumradius(other);
            if (std::hypot(cand.x - other.x, cand.y - other.y) <= min_sep) return false;
        }
        return true;
    };

    for (int class_id = 0; class_id < 3; ++class_id) {
        const double margin = circumradius(make_object(class_id, 0, 0, 0)) + 0.5;
        const double ex = cfg.map_extent_x - margin;
        const double ey = cfg.map_extent_y - margin;
        const bool clustered = class_id == 1;  // pedestrians walk in small groups
        int remaining = cfg.object_counts[static_cast<std::size_t>(class_id)];
        double lead_x = 0.0;
        double lead_y = 0.0;
        int group_left = 0;
        while (remaining > 0) {
            bool placed = false;
            for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
                Detection cand;
                if (clustered && group_left > 0) {
                    const double r = s.uniform(0.9, 2.5);
                    const double ang = s.uniform(-geometry::kPi, geometry::kPi);
                    cand = make_object(class_id, lead_x + r * std::cos(ang),
                                       lead_y + r * std::sin(ang),
                                       s.uniform(-geometry::kPi, geometry::kPi));
                    if (std::abs(cand.x) > ex || std::abs(cand.y) > ey) continue;
                } else {
                    cand = make_object(class_id, s.uniform(-ex, ex), s.uniform(-ey, ey),
                                       s.uniform(-geometry::kPi, geometry::kPi));
                }
                if (!fits(cand)) continue;
                placed = true;
                scene.objects.push_back(cand);
                if (clustered) {
                    if (group_left > 0) {
                        --group_left;
                    } else {
                        lead_x = cand.x;
                        lead_y = cand.y;
                        group_left = s.uniform_int(0, 2);  // up to two companions
                    }
                }
            }
            if (!placed) {
                throw std::runtime_error("generate_scene: map too crowded to place objects");
            }
            --remaining;
        }
    }

    scene.agent_poses.reserve(cfg.agents.size());
    for (const AgentSpec& a : cfg.agents) {
        const bool is_ego = a.kind == AgentKind::Ego;
        const double fx = is_ego ? 0.3 : 0.8;
        const double fy = is_ego ? 0.5 : 0.8;
        const double x = s.uniform(-fx * cfg.map_extent_x, fx * cfg.map_extent_x);
        const double y = s.uniform(-fy * cfg.map_extent_y, fy * cfg.map_extent_y);
        const double yaw = s.uniform(-geometry::kPi, geometry::kPi);
        scene.agent_poses.emplace_back(x, y, yaw);
    }
    return scene;
}

geometry::DetectionSet sense(const ScenarioConfig& cfg, int agent_index, const Scene& scene,
                             int frame) {
    const AgentSpec& agent = cfg.agents[static_cast<std::size_t>(agent_index)];
    const DetectModel& m = agent.detect;
    const Pose2& pose = scene.agent_poses[static_cast<std::size_t>(agent_index)];
    rng::Stream s = streams::make(cfg, frame, streams::kSense,
                                  static_cast<std::uint64_t>(agent_index));
    const Pose2 to_local = geometry::inverse(pose);

    DetectionSet out;
    out.frame = geometry::Frame::AgentLocal;
    for (const Detection& obj : scene.objects) {
        if (std::hypot(obj.x - pose.x, obj.y - pose.y) > m.fov_range) continue;
        if (!s.bernoulli(m.recall_prob)) continue;
        Detection d = obj;
        d.x += s.gaussian(0.0, m.pos_sigma);
        d.y += s.gaussian(0.0, m.pos_sigma);
        d.yaw = geometry::wrap_angle(d.yaw + s.gaussian(0.0, m.yaw_sigma));
        d.confidence = clamp01(s.gaussian(m.conf_mean, m.conf_spread));
        d.source = agent_index;
        d = geometry::transform_detection(to_local, d);
        d.x *= m.range_scale;
        d.y *= m.range_scale;
        out.items.push_back(d);
    }

    const int n_fp = s.poisson(m.fp_rate);
    for (int i = 0; i < n_fp; ++i) {
        double fx = 0.0;
        double fy = 0.0;
        disc_point(s, m.fov_range, fx, fy);
        const int class_id = s.uniform_int(0, 2);
        Detection fp = make_object(class_id, fx, fy, s.uniform(-geometry::kPi, geometry::kPi));
        fp.confidence = s.uniform(0.15, 0.65);
        fp.source = agent_index;
        out.items.push_back(fp);
    }
    return out;
}

geometry::DetectionSet decode_surrogate(const ScenarioConfig& cfg, int agent_index,
                                        const geometry::DetectionSet& transmitted, int frame) {
    const AgentSpec& agent = cfg.agents[static_cast<std::size_t>(agent_index)];
    const DecodeModel& m = agent.decode;
    rng::Stream s = streams::make(cfg, frame, streams::kDecode,
                                  static_cast<std::uint64_t>(agent_index));

    DetectionSet out;
    out.frame = geometry::Frame::AgentLocal;
    if (m.mode == DecodeModel::Mode::Faithful) {
        for (const Detection& src : transmitted.items) {
            Detection d = src;
            d.x += s.gaussian(0.0, m.jitter_sigma);
            d.y += s.gaussian(0.0, m.jitter_sigma);
            d.yaw = geometry::wrap_angle(d.yaw + s.gaussian(0.0, m.jitter_sigma));
            d.confidence = clamp01(d.confidence + s.gaussian(0.0, m.conf_jitter));
            out.items.push_back(d);
        }
        return out;
    }

    for (const Detection& src : transmitted.items) {
        if (s.bernoulli(m.drop_prob)) continue;
        Detection d = src;
        d.x += s.gaussian(0.0, m.offset_sigma);
        d.y += s.gaussian(0.0, m.offset_sigma);
        d.confidence = clamp01((1.0 - m.conf_noise) * d.confidence + m.conf_noise * s.uniform());
        out.items.push_back(d);
    }
    const int n_phantom = s.poisson(m.hallucination_rate);
    const double reach = agent.detect.fov_range;
    for (int i = 0; i < n_phantom; ++i) {
        double fx = 0.0;
        double fy = 0.0;
        disc_point(s, reach, fx, fy);
        const int class_id = s.uniform_int(0, 2);
        Detection d = make_object(class_id, fx, fy, s.uniform(-geometry::kPi, geometry::kPi));
        d.confidence = s.uniform();
        d.source = agent_index;
        out.items.push_back(d);
    }
    return out;
}

double decode_severity(const DecodeModel& m) {
    if (m.mode == DecodeModel::Mode::Faithful) return 0.0;
    return clamp01(0.6 * m.drop_prob + 0.4 * std::min(1.0, m.offset_sigma / 4.0));
}

geometry::DetectionSet stage1_oracle(const ScenarioConfig& cfg,
                                     const std::vector<int>& intermediate_indices,
                                     const Scene& scene, int frame) {
    const int ego = ego_index(cfg);
    const DetectModel& em = cfg.agents[static_cast<std::size_t>(ego)].detect;

    std::vector<int> members;
    members.push_back(ego);
    for (int idx : intermediate_indices) {
        if (idx != ego) members.push_back(idx);
    }
    const int n_int = static_cast<int>(members.size()) - 1;

    double contamination = 0.0;
    for (int idx : members) {
        if (idx == ego) continue;
        contamination += decode_severity(cfg.agents[static_cast<std::size_t>(idx)].decode);
    }
    const double keep_prob = 1.0 / (1.0 + 0.8 * contamination);
    const double noise_scale =
        (1.0 + 1.2 * contamination) / std::sqrt(1.0 + static_cast<double>(n_int));
    const double conf_mean = kStage1ConfMean - 0.2 * std::min(1.0, contamination);

    DetectionSet out;
    out.frame = geometry::Frame::EgoGlobal;
    for (std::size_t oi = 0; oi < scene.objects.size(); ++oi) {
        const Detection& obj = scene.objects[oi];
        bool detected = false;
        int covering = 0;
        for (int idx : members) {
            const Pose2& p = scene.agent_poses[static_cast<std::size_t>(idx)];
            if (std::hypot(obj.x - p.x, obj.y - p.y) >
                cfg.agents[static_cast<std::size_t>(idx)].detect.fov_range) {
                continue;
            }
            ++covering;
            rng::Stream rs = streams::make(
                cfg, frame, streams::kStage1Recall,
                rng::mix_seed({oi, static_cast<std::uint64_t>(idx)}));
            if (rs.bernoulli(cfg.agents[static_cast<std::size_t>(idx)].detect.recall_prob)) {
                detected = true;
            }
        }
        if (!detected && covering >= 2) {
            rng::Stream ss = streams::make(cfg, frame, streams::kStage1Synergy,
                                           static_cast<std::uint64_t>(oi));
            detected = ss.bernoulli(kStage1SynergyRecall);
        }
        if (!detected) continue;

        rng::Stream ns = streams::make(cfg, frame, streams::kStage1Noise,
                                       static_cast<std::uint64_t>(oi));
        if (!ns.bernoulli(keep_prob)) continue;  // contamination-induced miss
        Detection d = obj;
        d.x += ns.gaussian(0.0, em.pos_sigma * noise_scale);
        d.y += ns.gaussian(0.0, em.pos_sigma * noise_scale);
        d.yaw = geometry::wrap_angle(d.yaw + ns.gaussian(0.0, em.yaw_sigma * noise_scale));
        d.confidence = clamp01(ns.gaussian(conf_mean, kStage1ConfSpread));
        d.source = geometry::kSourceStage1;
        out.items.push_back(d);
    }

    const Pose2& ego_pose = scene.agent_poses[static_cast<std::size_t>(ego)];
    rng::Stream fs = streams::make(cfg, frame, streams::kStage1Fp);
    const int n_fp = fs.poisson(em.fp_rate);
    for (int i = 0; i < n_fp; ++i) {
        double fx = 0.0;
        double fy = 0.0;
        disc_point(fs, em.fov_range, fx, fy);
        const int class_id = fs.uniform_int(0, 2);
        Detection fp = make_object(class_id, 0, 0, fs.uniform(-geometry::kPi, geometry::kPi));
        fp.x = ego_pose.x + fx;
        fp.y = ego_pose.y + fy;
        fp.confidence = fs.uniform(0.15, 0.65);
        fp.source = geometry::kSourceStage1;
        out.items.push_back(fp);
    }

    if (contamination > 0.0) {
        rng::Stream cs = streams::make(cfg, frame, streams::kStage1Contam);
        const int n_ghost = cs.poisson(3.0 * contamination);
        for (int i = 0; i < n_ghost; ++i) {
            double fx = 0.0;
            double fy = 0.0;
            disc_point(cs, em.fov_range, fx, fy);
            const int class_id = cs.uniform_int(0, 2);
            Detection ghost = make_object(class_id, 0, 0, cs.uniform(-geometry::kPi, geometry::kPi));
            ghost.x = ego_pose.x + fx;
            ghost.y = ego_pose.y + fy;
            ghost.confidence = cs.uniform(0.3, 0.9);
            ghost.source = geometry::kSourceStage1;
            out.items.push_back(ghost);
        }
    }
    return out;
}

geometry::Pose2 inject_pose_noise(const geometry::Pose2& true_pose, double sigma_pos_m,
                                  double sigma_head_deg, rng::Stream& stream) {
    const double gx = stream.gaussian();
    const double gy = stream.gaussian();
    const double gyaw = stream.gaussian();
    const double sigma_head = sigma_head_deg * geometry::kPi / 180.0;
    return Pose2(true_pose.x + sigma_pos_m * gx, true_pose.y + sigma_pos_m * gy,
                 true_pose.yaw + sigma_head * gyaw);
}

}  // namespace hydra::sim
