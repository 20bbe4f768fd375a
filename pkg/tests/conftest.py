from hypothesis import settings

# first calls include numba compilation, so per-example deadlines are meaningless
settings.register_profile("erwlab", deadline=None, max_examples=100)
settings.load_profile("erwlab")
