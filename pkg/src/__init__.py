# Robust Wald-type tests based on minimum density power divergence estimators
