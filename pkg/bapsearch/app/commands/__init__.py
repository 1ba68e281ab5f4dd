from . import equivalence, fit, graphs, schema, search, simulate

__all__ = ['equivalence', 'fit', 'graphs', 'schema', 'search', 'simulate']
