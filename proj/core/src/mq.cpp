#include "trendlens/mq.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

#include "trendlens/errors.hpp"

namespace trendlens {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string slugify(const std::string& text) {
  std::string out;
  bool pending_dash = false;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      if (pending_dash && !out.empty()) out.push_back('-');
      pending_dash = false;
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      pending_dash = true;
    }
    if (out.size() >= 40) break;
  }
  return out.empty() ? "mq" : out;
}

// Whole-month spans compare by month count so e.g. 2024 (366 days) and 2025
// (365 days) count as equal calendar length.
bool equal_calendar_length(const Period& a, const Period& b) {
  auto whole_months = [](const Period& p) -> std::optional<int> {
    if (p.start.day() != 1) return std::nullopt;
    if (p.end != Date::last_of_month(p.end.year(), p.end.month())) return std::nullopt;
    return (p.end.year() * 12 + static_cast<int>(p.end.month())) -
           (p.start.year() * 12 + static_cast<int>(p.start.month())) + 1;
  };
  auto ma = whole_months(a);
  auto mb = whole_months(b);
  if (ma && mb) return *ma == *mb;
  return (a.end.serial() - a.start.serial()) == (b.end.serial() - b.start.serial());
}

void validate_periods(const std::pair<Period, Period>& p) {
  const auto& [p1, p2] = p;
  if (p1.start > p1.end || p2.start > p2.end) {
    throw InvalidPeriodSpec("period start must not be after its end");
  }
  if (!(p1.end < p2.start)) {
    throw InvalidPeriodSpec("explicit periods must be chronologically ordered and non-overlapping");
  }
  if (!equal_calendar_length(p1, p2)) {
    throw InvalidPeriodSpec("explicit periods must have equal calendar length");
  }
}

std::string default_timeframe_text(const PeriodSpec& spec) {
  if (spec.frequency) {
    switch (*spec.frequency) {
      case Frequency::Monthly: return "calendar month";
      case Frequency::Quarterly: return "calendar quarter";
      case Frequency::Yearly: return "calendar year";
    }
  }
  if (spec.explicit_periods) {
    const auto& [p1, p2] = *spec.explicit_periods;
    return p1.start.iso() + ".." + p1.end.iso() + " vs " + p2.start.iso() + ".." + p2.end.iso();
  }
  return "period";
}

const json* find_field(const json& doc, const char* name, const char* alias) {
  if (auto it = doc.find(name); it != doc.end()) return &*it;
  if (alias) {
    if (auto it = doc.find(alias); it != doc.end()) return &*it;
  }
  return nullptr;
}

std::string require_text(const json& doc, const char* name, const char* alias) {
  const json* v = find_field(doc, name, alias);
  if (!v) throw MissingField(std::string("missing required field: ") + name);
  if (!v->is_string()) throw MalformedConfig(std::string(name) + " must be a string");
  std::string s = trim(v->get<std::string>());
  if (s.empty()) throw MissingField(std::string("missing required field: ") + name);
  return s;
}

PeriodSpec timeframe_from_json(const json& tf, std::string& text_out) {
  PeriodSpec spec;
  if (tf.is_string()) {
    // Shorthand: free display text only; cadence defaults to yearly.
    text_out = trim(tf.get<std::string>());
    spec.frequency = Frequency::Yearly;
    return spec;
  }
  if (!tf.is_object()) throw MalformedConfig("timeframe must be a string or an object");

  if (tf.contains("buffer_months")) {
    if (!tf["buffer_months"].is_number_integer()) {
      throw InvalidPeriodSpec("buffer_months must be an integer");
    }
    spec.buffer_months = tf["buffer_months"].get<int>();
    if (spec.buffer_months < 0) throw InvalidPeriodSpec("buffer_months must be >= 0");
  }

  bool has_freq = tf.contains("frequency");
  bool has_periods = tf.contains("periods");
  if (has_freq && has_periods) {
    throw InvalidPeriodSpec("timeframe cannot declare both frequency and explicit periods");
  }
  if (has_periods) {
    const auto& arr = tf["periods"];
    if (!arr.is_array() || arr.size() != 2) {
      throw InvalidPeriodSpec("timeframe.periods must be an array of exactly two periods");
    }
    std::pair<Period, Period> p{period_from_json(arr[0]), period_from_json(arr[1])};
    validate_periods(p);
    spec.explicit_periods = p;
  } else {
    // Default cadence is yearly; the case-study configs compare calendar years.
    spec.frequency =
        has_freq ? frequency_from_string(tf["frequency"].get<std::string>()) : Frequency::Yearly;
  }

  if (tf.contains("text") && tf["text"].is_string()) {
    text_out = trim(tf["text"].get<std::string>());
  }
  return spec;
}

}  // namespace

std::string to_string(Frequency f) {
  switch (f) {
    case Frequency::Monthly: return "monthly";
    case Frequency::Quarterly: return "quarterly";
    case Frequency::Yearly: return "yearly";
  }
  return "yearly";
}

Frequency frequency_from_string(const std::string& s) {
  if (s == "monthly") return Frequency::Monthly;
  if (s == "quarterly") return Frequency::Quarterly;
  if (s == "yearly") return Frequency::Yearly;
  throw InvalidPeriodSpec("unknown frequency '" + s + "' (expected monthly|quarterly|yearly)");
}

json period_to_json(const Period& p) {
  return json{{"start", p.start.iso()}, {"end", p.end.iso()}};
}

Period period_from_json(const json& j) {
  if (!j.is_object() || !j.contains("start") || !j.contains("end")) {
    throw InvalidPeriodSpec("period must be an object with start and end dates");
  }
  Period p{Date::parse(j["start"].get<std::string>()), Date::parse(j["end"].get<std::string>())};
  if (p.start > p.end) throw InvalidPeriodSpec("period start must not be after its end");
  return p;
}

std::string MonitoringQuestion::render() const {
  return "Among [" + subject + "] that [" + opportunity + "], how many [" + risk_event +
         "] per [" + timeframe_text + "]?";
}

MonitoringQuestion mq_from_json(const json& doc) {
  if (!doc.is_object()) throw MalformedConfig("config root must be a JSON object");

  MonitoringQuestion mq;
  mq.subject = require_text(doc, "subject", "S");
  mq.opportunity = require_text(doc, "opportunity", "O");
  mq.risk_event = require_text(doc, "risk_event", "R");

  if (const json* tf = find_field(doc, "timeframe", "T")) {
    mq.timeframe = timeframe_from_json(*tf, mq.timeframe_text);
  } else {
    mq.timeframe.frequency = Frequency::Yearly;
  }
  if (mq.timeframe_text.empty()) mq.timeframe_text = default_timeframe_text(mq.timeframe);

  if (doc.contains("harm_unit")) {
    if (!doc["harm_unit"].is_string()) throw MalformedConfig("harm_unit must be a string");
    mq.harm_unit = trim(doc["harm_unit"].get<std::string>());
    if (mq.harm_unit.empty()) throw MissingField("missing required field: harm_unit");
  } else {
    mq.harm_unit = "incidents";
  }

  if (doc.contains("id") && doc["id"].is_string()) mq.id = trim(doc["id"].get<std::string>());
  if (mq.id.empty()) mq.id = slugify(mq.subject);

  if (doc.contains("notes") && doc["notes"].is_string()) mq.notes = doc["notes"].get<std::string>();
  return mq;
}

MonitoringQuestion parse_mq(const std::string& config_text) {
  json doc;
  try {
    doc = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw MalformedConfig(std::string("config is not valid JSON: ") + e.what());
  }
  return mq_from_json(doc);
}

json mq_to_json(const MonitoringQuestion& mq) {
  json tf;
  tf["text"] = mq.timeframe_text;
  tf["buffer_months"] = mq.timeframe.buffer_months;
  if (mq.timeframe.explicit_periods) {
    tf["periods"] = json::array({period_to_json(mq.timeframe.explicit_periods->first),
                                 period_to_json(mq.timeframe.explicit_periods->second)});
  } else if (mq.timeframe.frequency) {
    tf["frequency"] = to_string(*mq.timeframe.frequency);
  }
  json doc{{"id", mq.id},
           {"subject", mq.subject},
           {"opportunity", mq.opportunity},
           {"risk_event", mq.risk_event},
           {"timeframe", tf},
           {"harm_unit", mq.harm_unit},
           {"notes", mq.notes}};
  return doc;
}

std::string serialize_mq(const MonitoringQuestion& mq) { return mq_to_json(mq).dump(2) + "\n"; }

std::pair<Period, Period> derive_periods(const PeriodSpec& spec, const Date& run_date) {
  if (spec.explicit_periods) return *spec.explicit_periods;
  if (!spec.frequency) throw InvalidPeriodSpec("period spec has neither periods nor frequency");

  const Date cutoff = run_date.plus_months_clamped(-spec.buffer_months);
  const int step = *spec.frequency == Frequency::Monthly    ? 1
                   : *spec.frequency == Frequency::Quarterly ? 3
                                                             : 12;

  // Latest whole period (aligned to the cadence) ending on or before cutoff.
  int y = cutoff.year();
  int m0 = (static_cast<int>(cutoff.month()) - 1) / step * step + 1;  // period containing cutoff
  auto period_at = [&](int year, int start_month) {
    int end_month = start_month + step - 1;
    return Period{Date::first_of_month(year, static_cast<unsigned>(start_month)),
                  Date::last_of_month(year, static_cast<unsigned>(end_month))};
  };
  auto shift_back = [&](int& year, int& start_month) {
    start_month -= step;
    if (start_month < 1) {
      start_month += 12;
      year -= 1;
    }
  };

  Period p2 = period_at(y, m0);
  if (p2.end > cutoff) {
    shift_back(y, m0);
    p2 = period_at(y, m0);
  }
  int y1 = y, m1 = m0;
  shift_back(y1, m1);
  if (y1 < 1) {
    throw InsufficientHistory("run date " + run_date.iso() +
                              " is too early to yield two complete periods after the buffer");
  }
  Period p1 = period_at(y1, m1);
  return {p1, p2};
}

MonitoringQuestion wizard(std::istream& in, std::ostream& out) {
  auto ask = [&](const std::string& prompt, bool required) -> std::string {
    std::string line;
    for (;;) {
      out << prompt << "\n> " << std::flush;
      if (!std::getline(in, line)) throw Aborted("input closed before the question was complete");
      line = trim(line);
      if (line == "q") throw Aborted("cancelled");
      if (!line.empty() || !required) return line;
      out << "A value is required (or 'q' to cancel).\n";
    }
  };

  out << "Define a monitoring question: Among [S] that [O], how many [R] per [T]?\n"
      << "Answer each prompt; enter 'q' at any time to cancel.\n\n";

  json doc;
  doc["subject"] = ask("Subject (S) - who or what is at risk?", true);
  doc["opportunity"] = ask("Opportunity (O) - what creates the exposure?", true);
  doc["risk_event"] = ask("Risk event (R) - what specific harm?", true);
  json tf;
  tf["text"] = ask("Timeframe (T) - over what period?", true);
  std::string freq = ask("Reporting cadence [monthly|quarterly|yearly] (default yearly)", false);
  tf["frequency"] = freq.empty() ? "yearly" : freq;
  doc["timeframe"] = tf;
  std::string unit = ask("Harm unit (default incidents)", false);
  if (!unit.empty()) doc["harm_unit"] = unit;
  std::string id = ask("Question id (default derived from subject)", false);
  if (!id.empty()) doc["id"] = id;

  MonitoringQuestion mq = mq_from_json(doc);
  out << "\n" << mq.render() << "\n";
  return mq;
}

}  // namespace trendlens
