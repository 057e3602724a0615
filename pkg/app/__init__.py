# Quiver duality engine
