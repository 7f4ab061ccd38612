# Elliptrack package
