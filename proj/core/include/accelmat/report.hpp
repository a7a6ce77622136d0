#pragma once

#include <map>
#include <string>
#include <vector>

#include "accelmat/evaluation.hpp"

namespace accelmat {

/// Score-file IO: one `<task_id>.scores.json` per task, holding one section
/// per evaluated mode.
std::string score_filename(const std::string& task_id);
void write_score_card(const ScoreCard& card, const std::string& dir);  // merges by mode
std::vector<ScoreCard> load_score_cards(const std::string& dir);

/// `mode,criterion,mean,percent` rows: three closeness criteria plus
/// closeness_overall, six quality criteria plus quality_overall, per mode in
/// canonical mode order. Byte-stable for identical inputs.
std::string report_csv(const std::map<std::string, AggregateReport>& by_mode);

/// `mode,mean_agreed,n_suggestions,traces`
std::string agreement_csv(const std::vector<AgreementRow>& rows);

/// Two-panel grouped bar chart (closeness criteria left, quality criteria
/// right), one bar per mode. Pure text emission, no plotting dependency.
std::string report_svg(const std::map<std::string, AggregateReport>& by_mode);

}  // namespace accelmat
