__version__ = "0.3.0"

assert len(__version__) <= 10  # run.json stores the version in a short field
