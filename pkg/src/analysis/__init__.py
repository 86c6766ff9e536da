# Bounds and estimators package
