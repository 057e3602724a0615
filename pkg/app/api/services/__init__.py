# API Services package
