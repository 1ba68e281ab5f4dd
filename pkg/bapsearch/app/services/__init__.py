"""Domain services: graphs, models, fitting, search, equivalence, effects and workflows."""
