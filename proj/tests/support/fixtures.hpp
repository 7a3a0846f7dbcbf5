#pragma once

// Shared inputs for the test suites: the shipped Abilene configuration and
// the three-device triangle used by the hand-derived examples.

#include <string>

#include "drp/harness.hpp"
#include "drp/model.hpp"
#include "drp/scenario.hpp"

namespace drp::test {

inline std::string data_file(const std::string& name) { return std::string(DRP_DATA_DIR) + "/" + name; }
inline std::string test_file(const std::string& name) {
  return std::string(DRP_TEST_DIR) + "/" + name;
}

struct AbileneSetup {
  Topology topology = load_topology(read_json_file(data_file("abilene.json")));
  ServiceChain service = load_service(read_json_file(data_file("service.json")));
  DeploymentMap deployment = load_deployment(read_json_file(data_file("deployment.json")));
  CampaignSpec campaign = load_campaign(read_json_file(data_file("campaign.json")));

  Request request() const { return {campaign.begin_device, campaign.end_device}; }
  CampaignInputs inputs() const { return {topology, service, deployment, campaign}; }
};

inline const AbileneSetup& abilene() {
  static const AbileneSetup setup;
  return setup;
}

// Triangle A-B (2 ms), B-C (3 ms), A-C (10 ms); one 200 MI function with
// instances on B and C; request from A back to A.
struct Triangle {
  Topology topology = load_topology(read_json_file(test_file("data/t3_topology.json")));
  ServiceChain service = load_service(read_json_file(test_file("data/t3_service.json")));
  DeploymentMap deployment = load_deployment(read_json_file(test_file("data/t3_deployment.json")));
  LoadState load = load_load_state(topology, read_json_file(test_file("data/t3_load.json")));
  Request request{"A", "A"};

  PlacementProblem problem() const { return {topology, load, service, deployment, request}; }
};

}  // namespace drp::test
