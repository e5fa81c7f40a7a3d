#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "ehsim/sweep.hpp"
#include "ehsim/trace.hpp"

namespace ehsim {

// Floats are printed with 12 significant digits so regenerated figures are
// reproducible from the CSV alone.
inline std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& rows) {
    os << "e_c,theta,empirical_underflow,approx_exp,approx_refined,delta_hat,events,"
          "low_confidence\n";
    for (const SweepPoint& row : rows) {
        if (!row.error.empty())
            continue; // failed rows are reported on stderr by the caller
        os << csv_num(row.e_c) << ',' << csv_num(row.theta) << ','
           << csv_num(row.stats.underflow_freq) << ',' << csv_num(row.approx_exp) << ','
           << csv_num(row.approx_refined) << ',' << csv_num(row.stats.delta_hat) << ','
           << row.stats.underflow_events << ',' << (row.stats.low_confidence ? 1 : 0) << '\n';
    }
}

inline void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
    os << "policy,theta,e_c,mean_service_rate,outage_freq\n";
    for (const CompareRow& row : rows) {
        os << row.policy << ',' << csv_num(row.theta) << ',' << csv_num(row.e_c) << ','
           << csv_num(row.mean_service_rate) << ',' << csv_num(row.outage_freq) << '\n';
    }
}

inline void write_stats_csv(std::ostream& os, const TraceStats& s) {
    os << "frames_counted,underflow_freq,outage_freq,delta_hat,overflow_loss_rate,"
          "mean_service_rate,mean_consumed,underflow_events,low_confidence,theta_hat,"
          "fit_r_squared\n";
    os << s.frames_counted << ',' << csv_num(s.underflow_freq) << ',' << csv_num(s.outage_freq)
       << ',' << csv_num(s.delta_hat) << ',' << csv_num(s.overflow_loss_rate) << ','
       << csv_num(s.mean_service_rate) << ',' << csv_num(s.mean_consumed) << ','
       << s.underflow_events << ',' << (s.low_confidence ? 1 : 0) << ','
       << (s.tail ? csv_num(s.tail->theta_hat) : "nan") << ','
       << (s.tail ? csv_num(s.tail->fit_r_squared) : "nan") << '\n';
}

inline void write_tail_csv(std::ostream& os, const TraceStats& s) {
    os << "threshold,exceed_frames,exceed_prob,log_prob\n";
    const TailCounts& t = s.tail_counts;
    for (std::size_t i = 0; i < t.thresholds.size(); ++i) {
        const double prob =
            t.frames ? static_cast<double>(t.exceed_frames[i]) / static_cast<double>(t.frames)
                     : 0.0;
        os << csv_num(t.thresholds[i]) << ',' << t.exceed_frames[i] << ',' << csv_num(prob)
           << ',' << (prob > 0.0 ? csv_num(std::log(prob)) : "-inf") << '\n';
    }
}

} // namespace ehsim
