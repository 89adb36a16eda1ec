# Backend module