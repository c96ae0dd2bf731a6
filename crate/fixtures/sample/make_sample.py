"""Writes sample.json, a synthetic housing-affordability thread."""
import json

OP = ("Rents in my city went up 30 percent in three years and wages did not move. "
      "I think the only real fix is to build far more housing. "
      "Zoning rules that ban apartments keep supply low and prices high. "
      "Change my view.")

REPLIES = [
    # supply and zoning
    "Zoning is the core problem. Single family zoning makes apartments illegal on most residential land. If you allow more apartments, supply rises and rents fall.",
    "Building more housing works when the new supply is large enough. Cities that upzoned saw rents grow slower than their neighbors. Supply is not magic but it matters.",
    "The zoning board in my town rejects every apartment proposal. Neighbors show up to every meeting and complain about parking. Supply never catches up with demand.",
    "New construction is expensive, so new apartments start at luxury rents. Older apartments then filter down and become cheaper. That filtering only happens if we build enough supply.",
    "Permits take two years here. Faster permits would let builders add supply before demand moves on. Zoning reform without permit reform does very little.",
    # rent control
    "Rent control protects tenants who already live in a unit. It also discourages landlords from maintaining buildings. Economists mostly agree rent control shrinks supply over time.",
    "Rent control saved my family from eviction. Without rent control our rent would have doubled. Tenants need protection right now, not in twenty years.",
    "Rent control and new supply are not opposites. You can cap rent increases on old buildings and exempt new construction. Several cities do exactly that.",
    "Rent control caps help the lucky tenants who hold a lease. Newcomers face higher rents because nobody moves out. It rewards staying put over everything else.",
    # interest rates and mortgages
    "Mortgage rates doubled in two years. A buyer with the same income can now afford a much smaller house. Interest rates matter as much as zoning for buyers.",
    "High interest rates also slow construction loans. Builders pause projects when borrowing costs rise. So rates hit supply and demand at the same time.",
    "When mortgage rates were low, prices shot up because buyers could borrow more. Cheap credit raises prices as much as it helps buyers. Lower rates are not a cure.",
    "My mortgage payment is now higher than my old rent. Rates and prices both went up at once. First time buyers are squeezed from both sides.",
    # landlords and investors
    "Investment firms are buying thousands of homes to rent them out. They outbid families with cash offers. Corporate landlords treat housing as an asset class.",
    "Investors own a small share of homes nationally. Blaming investors distracts from the supply shortage. Even so, in some neighborhoods investors buy a large share of sales.",
    "Short term rentals take apartments off the market. A building full of vacation rentals houses no residents. Cities should limit short term rentals in tight markets.",
    "My landlord raised the rent every year and never fixed anything. Landlords know tenants have nowhere else to go. Weak bargaining power is the real issue for renters.",
    # public and social housing
    "Public housing in Vienna keeps rents low for a huge share of residents. The city builds social housing continuously and owns the land. Public housing can work when it is funded well.",
    "Social housing needs steady public funding, not one off grants. Mixed income public housing avoids concentrating poverty. Governments used to build this at scale.",
    "Public housing failed in many American cities because it was underfunded. Maintenance was cut and buildings decayed. The model was sound but the funding was not.",
    # transit and commuting
    "Cheap housing exists two hours away from the jobs. Long commutes are the hidden cost of affordable housing. Better transit would open up more affordable neighborhoods.",
    "Building apartments near train stations cuts commute times and car costs. Transit oriented housing lowers the total cost of living. Transport costs are part of affordability.",
    "I moved far out to afford rent and now spend three hours a day commuting. The savings on rent went into gas and car payments. Commuting ate my whole budget.",
    # wages and income
    "Housing costs rose much faster than wages for two decades. If wages kept pace, rents would not feel impossible. Affordability is about income as much as price.",
    "Raising the minimum wage would help renters pay the rent. Landlords may raise rents when wages go up. Higher wages alone cannot fix a supply shortage.",
    "Teachers and nurses cannot afford to live in the cities they serve. Wages for essential workers lag far behind local rents. Employers struggle to hire because of housing costs.",
    # homelessness and health
    "Homelessness rises when rents rise, more than with drug use or weather. Cities with expensive housing have the most people living on the street. Housing first programs reduce homelessness.",
    "Housing first programs give people a stable home before treatment. Stable housing improves health and reduces emergency room visits. It costs less than leaving people on the street.",
    # meta and interaction
    "I agree with you.",
    "Thanks for the delta!",
    "This is a great point.",
    "Well said.",
    "Can you provide a source for that?",
    "I agree with you. Great post.",
    "Thank you for explaining this so clearly.",
    "Edit: fixed a typo.",
    "I think you misunderstood my point.",
    "Good question, I had not thought about that.",
    "You are absolutely right about that.",
    "This.",
    # noise
    "[deleted]",
    "Your comment has been removed for breaking Rule 1. Please be civil.",
]

discussion = {
    "id": "t3_housing_cmv",
    "title": "CMV: Building more housing is the only real fix for rising rents",
    "op_body": OP,
    "replies": [
        {
            "id": f"c{i:02d}",
            "author": f"user{i % 17}",
            "body": body,
            "parent_id": None if i % 4 == 0 else f"c{(i - 1):02d}",
            "created_utc": 1_700_000_000 + 60 * i,
        }
        for i, body in enumerate(REPLIES)
    ],
}
with open("sample.json", "w") as f:
    json.dump(discussion, f, indent=2, ensure_ascii=False)
    f.write("\n")
