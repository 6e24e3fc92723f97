#include "urbanloop/ingest/preprocess.hpp"

#include <stdexcept>

namespace urbanloop {

const CategorySet& default_excluded_categories()
{
    static const CategorySet excluded = {
        "Train",
        "Transport Hub",
        "Transportation Service",
        "Travel and Transportation",
        "Boat or Ferry",
        "Platform",
        "Road",
        "Island",
        "River",
        "Housing Development",
        "Meeting Room",
        "Conference Room",
        "Office",
        "Home (private)",
        "Apartment or Condo",
        "Unknown",
    };
    return excluded;
}

Dataset preprocess(const Dataset& data, const CategorySet& excluded)
{
    if (excluded.empty())
        return data;

    const Catalog& catalog = data.catalog();
    std::vector<char> drop(catalog.category_count(), 0);
    for (CategoryIndex c = 0; c < catalog.category_count(); ++c)
        drop[c] = excluded.contains(catalog.category_name(c)) ? 1 : 0;

    std::vector<VisitEvent> kept;
    kept.reserve(data.size());
    for (const VisitEvent& e : data.events())
        if (!drop[catalog.category_of(e.venue)])
            kept.push_back(e);
    return data.with_events(std::move(kept)).compacted();
}

void SplitSpec::validate() const
{
    if (!(t_train_days > 0.0) || !(t_train_days < t_max_days))
        throw std::invalid_argument("split requires 0 < t_train < t_max");
}

Split split(const Dataset& data, const SplitSpec& spec)
{
    spec.validate();
    std::vector<VisitEvent> train;
    std::vector<VisitEvent> post;
    if (!data.empty()) {
        const Timestamp start = data.events().front().time;
        const Timestamp train_end = start + days_to_seconds(spec.t_train_days);
        const Timestamp max_end = start + days_to_seconds(spec.t_max_days);
        for (const VisitEvent& e : data.events()) {
            if (e.time <= train_end)
                train.push_back(e);
            else if (e.time <= max_end)
                post.push_back(e);
        }
    }
    return Split{data.with_events(std::move(train)), data.with_events(std::move(post))};
}

} // namespace urbanloop
