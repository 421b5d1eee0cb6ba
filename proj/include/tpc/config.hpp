#pragma once

#include <map>
#include <string>
#include <vector>

#include "tpc/controller.hpp"
#include "tpc/sim.hpp"

namespace tpc {

/// Parsed `[section] key = value` text. Sections and keys are
/// case-sensitive; values stay raw strings until typed access.
class ConfigMap {
public:
    static ConfigMap parse_text(const std::string& text);
    static ConfigMap parse_file(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    long get_long(const std::string& section, const std::string& key,
                  long fallback) const;
    bool get_bool(const std::string& section, const std::string& key,
                  bool fallback) const;
    /// Comma-separated list of doubles.
    std::vector<double> get_list(const std::string& section,
                                 const std::string& key) const;

    const std::map<std::string, std::map<std::string, std::string>>& sections()
        const {
        return sections_;
    }

    /// Canonical serialization (sorted sections/keys); hashing this gives a
    /// stable provenance fingerprint for reports.
    std::string canonical_text() const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// FNV-1a over bytes, reported as 16 hex digits.
std::string fingerprint(const std::string& text);

enum class ControllerKind { tpc, deepc };

struct TrainingSection {
    ExcitationSpec excitation;
    std::uint64_t seed = 1;
    bool closed_loop = false;
};

struct ScenarioSection {
    ReferenceSchedule schedule;
    double duration = 1.5;  // seconds
};

struct OutputSection {
    std::string directory = "out";
    bool plots = true;
};

struct ControllerSection {
    ControllerKind kind = ControllerKind::tpc;
    TpcConfig tpc = TpcConfig::experiment_defaults();
    double deepc_gamma = 1e-6;
};

/// Everything one experiment needs: plant, controller, training data
/// collection, scenario, and output destinations.
struct ExperimentConfig {
    PlantParams plant;
    ControllerSection controller;
    TrainingSection training;
    ScenarioSection scenario;
    OutputSection output;
    LoopRates rates;
    std::string source_text;  // canonical text this config was built from

    void validate() const;

    static ExperimentConfig from_map(const ConfigMap& map);
    static ExperimentConfig from_file(const std::string& path);
};

/// Canonical text of a named preset (fig3, fig3_constrained, fig5, fig6,
/// table1). The files under presets/ carry exactly this text.
std::string preset_text(const std::string& name);
std::vector<std::string> preset_names();
ExperimentConfig make_preset(const std::string& name);

}  // namespace tpc
