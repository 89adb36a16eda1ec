# Frontend module