#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendwatch/metrics.hpp"
#include "trendwatch/review.hpp"
#include "trendwatch/store.hpp"

namespace trendwatch::exchange {

nlohmann::json to_json(const metrics::ClaimOutcome& c);
metrics::ClaimOutcome claim_outcome_from_json(const nlohmann::json& j);

/// {"run_id", "config", "claims": [...], "decisions": [...], "reviews": [...]}
nlohmann::json export_reviews(const store::State& state);

/// Report input from an export document; missing "claims" means none.
metrics::ReportInput report_input_from_export(const nlohmann::json& j);

struct ImportResult {
    std::size_t applied = 0;
    std::size_t duplicates = 0;  // already in the store
    std::vector<std::string> errors;

    nlohmann::json to_json() const;
};

/// Appends decisions, then reviews, each through the store's CAS path.
/// Items already present (same content) are skipped, so re-importing is a
/// no-op. Rejected items are reported, not fatal.
ImportResult import_reviews(store::Store& store, const review::ReviewExport& data);

}  // namespace trendwatch::exchange
