#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdcp/geometry.hpp"
#include "pdcp/rng.hpp"

// Deterministic two-embodiment tabletop world with a scripted expert.
// Everything is a pure function of (config, seed): regenerating a dataset
// reproduces files byte for byte.

namespace pdcp::world {

struct BadConfig : Error {
  explicit BadConfig(const std::string& w) : Error("BadConfig: " + w) {}
};
struct UnknownSkill : Error {
  explicit UnknownSkill(const std::string& w) : Error("UnknownSkill: " + w) {}
};
struct RetryExhausted : Error {
  explicit RetryExhausted(const std::string& w) : Error("RetryExhausted: " + w) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error("ParseError: " + w) {}
};
struct ManifestMismatch : Error {
  explicit ManifestMismatch(const std::string& w) : Error("ManifestMismatch: " + w) {}
};

enum class Skill { GraspPlace = 0, Push = 1, Press = 2 };
inline constexpr std::size_t kSkillCount = 3;
std::string skill_name(Skill s);
Skill skill_from_name(const std::string& name);  // throws UnknownSkill

// Kinematic gap between demonstrators: a per-dimension affine on the action
// encoding plus actuation noise. A world-space target w is encoded as
// (w - bias) / scale; the env applies the forward map before stepping.
struct Embodiment {
  std::string tag;
  std::array<double, geom::kActionDim> scale;
  std::array<double, geom::kActionDim> bias;
  double pos_noise_std = 0.0;
  double finger_noise_std = 0.0;

  geom::Action19 apply(const geom::Action19& local) const;
  geom::Action19 invert(const geom::Action19& world) const;
  geom::Action19 add_noise(const geom::Action19& local, Rng& rng) const;
};

Embodiment human_embodiment();
Embodiment robot_embodiment();
const Embodiment& embodiment_by_tag(const std::string& tag);

struct WorldObject {
  geom::Vec3 position{};
  std::string kind;  // "cube", "button", "distractor"
  bool pressed = false;
  bool attached = false;
};

struct GoalSpec {
  Skill skill = Skill::GraspPlace;
  geom::Vec3 target_region{};
  double target_radius = 0.05;
};

struct WorldState {
  std::vector<WorldObject> objects;  // index 0 is the task target
  geom::Action19 effector;           // executed world-space configuration
  GoalSpec goal;
  geom::Vec3 initial_object_pos{};
  int time = 0;
};

struct WorldConfig {
  Skill skill = Skill::GraspPlace;
  int object_count = 1;  // target plus (object_count - 1) distractors
  geom::Vec3 bounds_lo{-0.30, -0.30, 0.0};
  geom::Vec3 bounds_hi{0.30, 0.30, 0.40};
  double position_range = 0.55;  // fraction of the xy bounds used at reset
  double position_offset = 0.0;  // extra reset spread, used by eval conditions
  double max_step = 0.03;        // per-step effector displacement bound
  double finger_rate = 0.35;     // per-step joint angle bound
  double grip_threshold = 0.7;   // mean finger angle counting as closed
  double grasp_radius = 0.045;
  double contact_radius = 0.035;
  double press_radius = 0.03;
  double approach_radius = 0.07;
  double push_success_dist = 0.05;
  double place_radius = 0.05;
  double min_object_separation = 0.09;
  double background_shift = 0.0;  // additive shift on the background channels
  int max_object_slots = 4;
  int horizon = 110;
};

WorldState env_reset(const WorldConfig& cfg, std::uint64_t seed);

// Moves the effector toward the embodiment-transformed target with bounded
// displacement; a closed grip within grasp radius attaches the nearest
// object, push contact displaces objects along the contact normal, and
// entering the press radius toggles button state.
WorldState env_step(const WorldState& state, const geom::Action19& action, const Embodiment& emb,
                    const WorldConfig& cfg);

bool success_predicate(const WorldState& state, const WorldConfig& cfg);

struct SubtaskFlags {
  bool approach = false;
  bool actuate = false;
  bool complete = false;
};
SubtaskFlags evaluate_subtasks(const std::vector<WorldState>& states, const WorldConfig& cfg);

// Flat observation: [object slots (xyz + pressed) | effector in the acting
// embodiment's encoding (19) | skill one-hot (3) | goal region xyz |
// background channels (4)].
std::size_t observation_dim(const WorldConfig& cfg);
std::vector<double> observe(const WorldState& state, const WorldConfig& cfg,
                            const Embodiment& emb);

// Phase-structured waypoint policy (approach, actuate, retreat) with seeded
// jitter; emits the action in the embodiment's own encoding.
geom::Action19 scripted_expert(const WorldState& state, Skill skill, const Embodiment& emb,
                               Rng& rng, const WorldConfig& cfg);

struct Frame {
  std::vector<double> obs;
  geom::Action19 action;
};

struct Trajectory {
  std::string episode_id;
  std::string embodiment;
  Skill skill = Skill::GraspPlace;
  std::vector<Frame> frames;
  bool success = false;
};

void save_trajectory(const Trajectory& t, const std::string& path);
Trajectory load_trajectory(const std::string& path);  // ParseError with line number

struct EpisodeRollout {
  Trajectory trajectory;
  std::vector<WorldState> states;
};

// Runs the scripted expert in the given world. jitter_rng drives the shared
// expert plan (same for both embodiments of a pair), noise_rng the
// embodiment-specific actuation noise.
EpisodeRollout run_expert_episode(const WorldConfig& cfg, std::uint64_t world_seed,
                                  const Embodiment& emb, std::uint64_t noise_salt);

struct DatasetCell {
  std::string embodiment;
  Skill skill = Skill::GraspPlace;
  int count = 0;
};

struct DatasetConfig {
  std::vector<DatasetCell> cells;
  WorldConfig world;
  int max_retries = 25;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::size_t observation_dim = 0;
  std::vector<DatasetCell> cells;
  std::vector<std::string> files;
};

// Writes one JSONL file per successful expert episode plus manifest.json.
// Episodes are paired across embodiments: the same (skill, index) shares a
// world seed and expert plan, so the two versions differ only through the
// embodiment affine and noise.
DatasetManifest generate_dataset(const DatasetConfig& cfg, std::uint64_t seed,
                                 const std::string& out_dir);

struct Dataset {
  DatasetManifest manifest;
  std::vector<Trajectory> trajectories;
};

Dataset load_dataset(const std::string& manifest_path);

std::string dataset_config_hash(const DatasetConfig& cfg);

}  // namespace pdcp::world
