#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hse/conversion.h"
#include "hse/layers.h"

namespace hse {

enum class Family { kCdae, kCrn };
enum class Domain { kReal, kComplex, kHybrid };
// How the complex input is formed from the normalized spectrogram.
enum class InputMode { kWarped, kRawComplex };

const char* family_name(Family f);
Family parse_family(const std::string& s);
const char* domain_name(Domain d);
Domain parse_domain(const std::string& s);
const char* input_mode_name(InputMode m);
InputMode parse_input_mode(const std::string& s);

// Shared by every conv / convT of a model; decoder layer j mirrors encoder
// layer L-1-j.
struct Geometry {
  std::size_t kernel = 8;
  std::size_t pad = 3;
  std::vector<std::size_t> strides{2, 2, 2, 2};

  bool operator==(const Geometry&) const = default;
};

// Widths of one branch. For complex branches widths count complex channels.
struct BranchSpec {
  std::vector<std::size_t> conv;
  std::vector<std::size_t> gru;  // CRN only
  std::size_t linear = 0;        // CRN only
  std::vector<std::size_t> deconv;

  bool empty() const { return conv.empty() && deconv.empty(); }
  bool operator==(const BranchSpec&) const = default;
};

// Optional explicit budgets in real-parameter units. Zero means "take the
// spec's own encoder / decoder sizes".
struct Budget {
  std::size_t encoder = 0;
  std::size_t decoder = 0;

  bool operator==(const Budget&) const = default;
};

enum class ConversionSite {
  kInput,           // split(Y) feeding a real model
  kOutput,          // real model output merged into a complex mask
  kRealInput,       // Mag feeding the hybrid real branch
  kBottleneckC2R,   // complex encoder output into the real decoder
  kBottleneckR2C,   // real encoder output into the complex decoder
};

const char* site_name(ConversionSite s);
ConversionSite parse_site(const std::string& s);

struct ConversionPlacement {
  ConversionSite site = ConversionSite::kInput;
  ConversionSpec conversion;

  bool operator==(const ConversionPlacement& o) const {
    return site == o.site && conversion.kind == o.conversion.kind &&
           conversion.align == o.conversion.align;
  }
};

// The conversion placements each domain's topology requires.
std::vector<ConversionPlacement> canonical_conversions(Domain d);

struct ModelSpec {
  static constexpr int kVersion = 1;

  std::string name;
  Family family = Family::kCdae;
  Domain domain = Domain::kReal;
  std::size_t bins = 129;
  Geometry geometry;
  BranchSpec real;     // real and hybrid models
  BranchSpec complex;  // complex and hybrid models
  std::vector<ConversionPlacement> conversions;
  CreluVariant crelu_variant = CreluVariant::kPrinted;
  InputMode input_mode = InputMode::kWarped;
  Budget budget;

  bool operator==(const ModelSpec& o) const;
};

// Throws ConfigError naming the violated law.
void validate(const ModelSpec& spec);

std::string to_json(const ModelSpec& spec);
// Strict: unknown keys, a missing version or a wrong version are errors.
ModelSpec spec_from_json(const std::string& text);
ModelSpec load_spec(const std::string& path);
void save_spec(const ModelSpec& spec, const std::string& path);
// FNV-1a of the canonical JSON.
std::uint64_t spec_hash(const ModelSpec& spec);

enum class BranchId { kReal, kComplex };
enum class Part { kEncoder, kDecoder };

// One layer of a validated spec with its frequency geometry resolved.
struct LayerPlan {
  std::string name;
  BranchId branch = BranchId::kReal;
  bool complex = false;
  Part part = Part::kEncoder;
  LayerKind kind = LayerKind::kConv;
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t output_pad = 0;
  std::size_t f_in = 1;
  std::size_t f_out = 1;
  Activation activation = Activation::kNone;

  // Real-equivalent parameters.
  std::size_t params() const;
  // Layer MACs per frame (4x for complex layers), excluding activation.
  std::uint64_t macs_per_frame() const;
  // Elements the activation touches per frame.
  std::uint64_t activation_elements() const { return out * f_out; }
};

std::vector<LayerPlan> plan_layers(const ModelSpec& spec);

// Frequency extent of the branch input (258 for the real model's split
// input, otherwise bins).
std::size_t branch_input_bins(const ModelSpec& spec, BranchId b);
// Frequency extent at the bottleneck.
std::size_t bottleneck_bins(const ModelSpec& spec, BranchId b);

// Real-equivalent parameter count of one part of one branch.
std::size_t part_params(const ModelSpec& spec, BranchId b, Part p);
std::size_t total_params(const ModelSpec& spec);

}  // namespace hse
