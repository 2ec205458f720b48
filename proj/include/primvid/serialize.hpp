#pragma once

// JSON forms of the domain types. Every to_json/from_json pair round-trips
// field for field.

#include <json.hpp>

#include "primvid/model.hpp"
#include "primvid/qa.hpp"
#include "primvid/state.hpp"

namespace primvid {

using Json = nlohmann::json;

void to_json(Json& j, const Vec2& v);
void from_json(const Json& j, Vec2& v);
void to_json(Json& j, const AttributeChange& c);
void from_json(const Json& j, AttributeChange& c);
void to_json(Json& j, const TimeWindow& w);
void from_json(const Json& j, TimeWindow& w);
void to_json(Json& j, const ObjectSpec& o);
void from_json(const Json& j, ObjectSpec& o);
void to_json(Json& j, const SceneSpec& s);
void from_json(const Json& j, SceneSpec& s);

/// Events carry a derived "timestamp" (MM:SS.mmm) when written with an fps.
Json event_to_json(const EventRecord& e, int fps);
void to_json(Json& j, const EventRecord& e);
void from_json(const Json& j, EventRecord& e);

void to_json(Json& j, const StateSnapshot& s);
void from_json(const Json& j, StateSnapshot& s);
void to_json(Json& j, const Action& a);
void from_json(const Json& j, Action& a);
void to_json(Json& j, const Operation& op);
void from_json(const Json& j, Operation& op);
void to_json(Json& j, const ScenarioScript& s);
void from_json(const Json& j, ScenarioScript& s);

void to_json(Json& j, const Provenance& p);
void from_json(const Json& j, Provenance& p);
void to_json(Json& j, const QASample& s);
void from_json(const Json& j, QASample& s);

}  // namespace primvid
